//! Adaptive 7/15-point Gauss–Kronrod quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const INITIAL_PIECES: usize = 8;

/// `(estimate, error estimate, ∫|f| estimate)` on `[a, b]`.
fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut abs = fc.abs() * WGK[7];
    for i in 0..7 {
        let dx = h * XGK[i];
        let (l, r) = (f(c - dx), f(c + dx));
        k += WGK[i] * (l + r);
        abs += WGK[i] * (l.abs() + r.abs());
        if i % 2 == 1 {
            g += WG[i / 2] * (l + r);
        }
    }
    (k * h, ((k - g) * h).abs(), abs * h.abs())
}

/// `∫_a^b f` to absolute accuracy `tol`, bisecting the worst interval until
/// the summed Kronrod error estimate drops below `tol` or reaches the
/// roundoff level of `∫|f|`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let width = (b - a) / INITIAL_PIECES as f64;
    let mut parts: Vec<_> = (0..INITIAL_PIECES)
        .map(|i| {
            let lo = a + i as f64 * width;
            let hi = if i + 1 == INITIAL_PIECES { b } else { lo + width };
            (lo, hi, kronrod(&mut f, lo, hi))
        })
        .collect();
    for _ in 0..20_000 {
        let (total, err, abs) = parts
            .iter()
            .fold((0.0, 0.0, 0.0), |(s, e, m), p| (s + p.2 .0, e + p.2 .1, m + p.2 .2));
        if err <= tol.max(50.0 * f64::EPSILON * abs) {
            return Ok(total);
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        parts.push((lo, mid, kronrod(&mut f, lo, mid)));
        parts.push((mid, hi, kronrod(&mut f, mid, hi)));
    }
    Err(Error::Evaluation {
        what: "quadrature",
        detail: format!("no convergence to {tol} on [{a}, {b}]"),
    })
}
