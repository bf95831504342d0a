use std::f64::consts::PI;
use std::fmt::Write;

use spiderweb_core::Configuration;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 40.0;

/// Bodies at angles `2πk/ℓ` and radii `r_i`, drawn as circles whose radius
/// grows like `m^{1/3}`. A central body is drawn when `m0 > 0`.
pub fn web_svg(cfg: &Configuration) -> String {
    let p = &cfg.params;
    let r = cfg.radii.as_slice();
    let outer = r[r.len() - 1];
    let half = SIZE / 2.0;
    let scale = (half - MARGIN) / outer;
    let m_max = p.masses().iter().cloned().fold(p.m0(), f64::max);
    let dot = |m: f64| (12.0 * (m / m_max).cbrt()).max(0.75);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for &ri in r {
        let _ = writeln!(
            s,
            r#"<circle cx="{half}" cy="{half}" r="{:.4}" fill="none" stroke="lightgray" stroke-width="0.5"/>"#,
            ri * scale
        );
    }
    if p.m0() > 0.0 {
        let _ = writeln!(
            s,
            r#"<circle cx="{half}" cy="{half}" r="{:.4}" fill="darkred"/>"#,
            dot(p.m0())
        );
    }
    let ell = p.ell();
    for (&ri, &mi) in r.iter().zip(p.masses()) {
        for k in 0..ell {
            let theta = 2.0 * PI * k as f64 / ell as f64;
            let x = half + ri * scale * theta.cos();
            let y = half - ri * scale * theta.sin();
            let _ = writeln!(
                s,
                r#"<circle cx="{x:.4}" cy="{y:.4}" r="{:.4}" fill="black"/>"#,
                dot(mi)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use spiderweb_core::{RadiiVector, SpiderwebParams};

    #[test]
    fn one_circle_per_body() {
        let p = SpiderwebParams::new(3, 1.0, vec![1.0, 0.5], -1.0).unwrap();
        let cfg = Configuration::new(p, RadiiVector::new(vec![1.0, 2.0]).unwrap()).unwrap();
        let svg = web_svg(&cfg);
        // 2 guide rings, 1 central body, 6 ring bodies
        assert_eq!(svg.matches("<circle").count(), 9);
        assert!(svg.contains(r#"version="1.1""#));
    }
}
