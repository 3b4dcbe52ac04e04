use num_complex::Complex64 as C;
fn main() {
    // compare series vs asymptotic on the annulus
    for r in [8.0f64, 9.0, 10.0, 12.0] {
        for kk in [0, 3, 7, 8] {
            let th = std::f64::consts::PI * (kk as f64 / 8.0 - 1.0) * 0.95;
            let z = C::from_polar(r, th);
            let (s, _sp) = olp_core::airy::airy_series(z);
            let (a, _ap) = olp_core::airy::airy(z);
            let rel = (s - a).norm() / s.norm().max(1e-300);
            println!("r={r} th={th:.3}  rel={rel:.3e}  series={s:.6e}");
        }
    }
    // connection at z = 2+i
    let w = C::from_polar(1.0, 2.0*std::f64::consts::PI/3.0);
    for z in [C::new(2.0,1.0), C::new(-4.0,3.0), C::new(11.0,-5.0)] {
        let s = olp_core::airy::airy(z).0 + w*olp_core::airy::airy(w*z).0 + w*w*olp_core::airy::airy(w*w*z).0;
        println!("conn at {z}: {:.3e}", s.norm());
    }
}
