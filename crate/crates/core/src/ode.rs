/// One classical Runge-Kutta step of `dx/dτ = f(x)` with step `h`.
pub(crate) fn rk4_step<const N: usize>(x: &[f64; N], h: f64, f: impl Fn(&[f64; N]) -> [f64; N]) -> [f64; N] {
    let shift = |base: &[f64; N], slope: &[f64; N], s: f64| {
        let mut out = *base;
        for (o, d) in out.iter_mut().zip(slope) {
            *o += s * d;
        }
        out
    };
    let k1 = f(x);
    let k2 = f(&shift(x, &k1, h / 2.0));
    let k3 = f(&shift(x, &k2, h / 2.0));
    let k4 = f(&shift(x, &k3, h));
    let mut out = *x;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}
