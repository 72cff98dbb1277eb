"""Hypothesis strategies for random layered circuits in the text format."""

from hypothesis import strategies as st

_prob = st.floats(0, 0.5, allow_nan=False)


@st.composite
def circuit_texts(draw, max_qubits=6, max_layers=6, noisy=True):
    n = draw(st.integers(2, max_qubits))
    lines = []
    num_meas = 0
    for _ in range(draw(st.integers(1, max_layers))):
        free = list(range(n))
        draw(st.randoms(use_true_random=False)).shuffle(free)
        idle = []
        noise = []
        while free:
            g = draw(st.sampled_from(["H", "R", "M", "MR", "CX", "CX", "idle"]))
            if g == "idle":
                idle.append(free.pop())
                continue
            if g == "CX":
                if len(free) < 2:
                    continue
                a, b = free.pop(), free.pop()
                lines.append(f"CX {a} {b}")
                if noisy and draw(st.booleans()):
                    pair = (a, b) if draw(st.booleans()) else (b, a)
                    noise.append(f"DEPOLARIZE2({draw(_prob)!r}) {pair[0]} {pair[1]}")
                continue
            q = free.pop()
            flip = ""
            if noisy and g in ("M", "MR") and draw(st.booleans()):
                flip = f"({draw(_prob)!r})"
            lines.append(f"{g}{flip} {q}")
            num_meas += g in ("M", "MR")
        if noisy:
            for name in ("X_ERROR", "Z_ERROR", "DEPOLARIZE1"):
                if draw(st.booleans()):
                    qs = draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=3, unique=True))
                    noise.append(f"{name}({draw(_prob)!r}) " + " ".join(map(str, qs)))
            if len(idle) >= 2 and draw(st.booleans()):
                noise.append(f"DEPOLARIZE2({draw(_prob)!r}) {idle[0]} {idle[1]}")
        lines += noise
        if num_meas:
            for _ in range(draw(st.integers(0, 2))):
                ks = draw(st.lists(st.integers(1, num_meas), min_size=1, max_size=3, unique=True))
                lines.append("DETECTOR " + " ".join(f"rec[-{k}]" for k in ks))
            if draw(st.booleans()):
                k = draw(st.integers(1, num_meas))
                lines.append(f"OBSERVABLE_INCLUDE({draw(st.integers(0, 1))}) rec[-{k}]")
        lines.append("TICK")
    lines.append(f"M {' '.join(map(str, range(n)))}")
    lines.append(f"DETECTOR rec[-1] rec[-{n}]")
    return "\n".join(lines)
