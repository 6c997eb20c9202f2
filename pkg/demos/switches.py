"""The two resonance switches, thermally averaged.

Interference switch: leads a quarter turn apart. On the free ring the level
at 1 reflects completely; lowering the potential to -3 moves the ring off
that level and lets current through.

Barrier switch: leads on opposite sides. Raising the potential to 3 makes the
ring evanescent at energy 1; what still gets through is tunnelling, which
caps the open/closed ratio near 4.57e3.
"""
from ringscatter import barrier_switch, interference_switch, switch_report

for spec in (interference_switch(beta=0.1, tau=1e-3), barrier_switch(beta=1.0, tau=1e-3)):
    rep = switch_report(spec)
    print(f"\n{spec.name} switch  beta={spec.beta}  tau={spec.tau}  mu={spec.mu}")
    print(f"  sigma open   {rep.sigma_open:.6g}")
    print(f"  sigma closed {rep.sigma_closed:.6g}")
    print(f"  transmitting state: {rep.transmitting}, contrast {rep.contrast:.4g}")
    for note in spec.notes:
        print("  note:", note)

print("\ncoupling dependence of the interference switch")
for tau in (1e-2, 1e-3):
    for beta in (0.05, 0.1, 0.5):
        rep = switch_report(interference_switch(beta=beta, tau=tau))
        print(f"  tau {tau:g}  beta {beta:4.2f}  contrast {rep.contrast:.3g}")
