//! Adaptive Gauss-Kronrod (7/15) quadrature for vector-valued integrands.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd Kronrod nodes 1, 3, 5, 7
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

struct Piece {
    a: f64,
    b: f64,
    value: Vec<f64>,
    err: f64,
}

fn rule(f: &mut impl FnMut(f64) -> Vec<f64>, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mid = f(c);
    let dim = mid.len();
    let mut kron: Vec<f64> = mid.iter().map(|v| v * WGK[7]).collect();
    let mut gauss: Vec<f64> = mid.iter().map(|v| v * WG[3]).collect();
    for k in 0..7 {
        let lo = f(c - h * XGK[k]);
        let hi = f(c + h * XGK[k]);
        for d in 0..dim {
            let s = lo[d] + hi[d];
            kron[d] += WGK[k] * s;
            if k % 2 == 1 {
                gauss[d] += WG[k / 2] * s;
            }
        }
    }
    let mut err: f64 = 0.0;
    for d in 0..dim {
        kron[d] *= h;
        err = err.max((kron[d] - gauss[d] * h).abs());
    }
    Piece { a, b, value: kron, err }
}

/// Integrates `f` over `[a, b]`, bisecting the interval with the largest error
/// estimate until the summed estimate (max over components) is below `tol`.
pub fn integrate_vec(mut f: impl FnMut(f64) -> Vec<f64>, a: f64, b: f64, tol: f64) -> Result<Vec<f64>> {
    let mut pieces = vec![rule(&mut f, a, b)];
    loop {
        let total_err: f64 = pieces.iter().map(|p| p.err).sum();
        if !total_err.is_finite() {
            return Err(Error::QuadratureFailure("integrand is not finite".into()));
        }
        if total_err <= tol {
            break;
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::QuadratureFailure(format!(
                "error estimate {total_err:e} above {tol:e} after {MAX_INTERVALS} subintervals"
            )));
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .expect("non-empty");
        let p = pieces.swap_remove(worst);
        let m = 0.5 * (p.a + p.b);
        if !(m > p.a && m < p.b) {
            return Err(Error::QuadratureFailure("subinterval below machine resolution".into()));
        }
        pieces.push(rule(&mut f, p.a, m));
        pieces.push(rule(&mut f, m, p.b));
    }
    let dim = pieces[0].value.len();
    let mut out = vec![0.0; dim];
    for p in &pieces {
        for d in 0..dim {
            out[d] += p.value[d];
        }
    }
    Ok(out)
}

pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_vec(|t| vec![f(t)], a, b, tol).map(|v| v[0])
}
