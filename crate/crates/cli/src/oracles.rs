//! Reference values computed independently of the library code paths.

use std::f64::consts::PI;

/// Product of basis blades by writing out both generator words and
/// bubble-sorting them; each swap flips the sign, each adjacent equal pair
/// contracts to `-1`.
pub fn blade_product_by_sorting(a: u32, b: u32) -> (i8, u32) {
    let mut word: Vec<u32> = (0..32).filter(|k| a >> k & 1 == 1).collect();
    word.extend((0..32).filter(|k| b >> k & 1 == 1));
    let mut sign = 1i8;
    let mut changed = true;
    while changed {
        changed = false;
        let mut i = 0;
        while i + 1 < word.len() {
            if word[i] > word[i + 1] {
                word.swap(i, i + 1);
                sign = -sign;
                changed = true;
            } else if word[i] == word[i + 1] {
                word.drain(i..i + 2);
                sign = -sign;
                changed = true;
                continue;
            }
            i += 1;
        }
    }
    (sign, word.iter().fold(0, |acc, k| acc | 1 << k))
}

/// Planar Brownian motion started on the bisector of a wedge of opening
/// `beta` at radius `r` inside the unit disc: probability of reaching the arc
/// before either wedge edge. Separation of variables gives
/// `(4 / pi) sum_{m odd} (-1)^{(m-1)/2} r^{m pi / beta} / m`.
pub fn wedge_arc_probability(beta: f64, r: f64) -> f64 {
    let lambda = PI / beta;
    let mut acc = 0.0;
    for j in 0..4000 {
        let m = (2 * j + 1) as f64;
        let term = r.powf(m * lambda) / m;
        acc += if j % 2 == 0 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    4.0 / PI * acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorting_oracle_small_cases() {
        // e1 e1 = -1, e2 e1 = -e12, e1 (e1 e2) = -e2
        assert_eq!(blade_product_by_sorting(0b1, 0b1), (-1, 0));
        assert_eq!(blade_product_by_sorting(0b10, 0b1), (-1, 0b11));
        assert_eq!(blade_product_by_sorting(0b1, 0b11), (-1, 0b10));
        assert_eq!(blade_product_by_sorting(0b11, 0b11), (-1, 0));
    }

    #[test]
    fn wedge_probability_limits() {
        // Half-disc (beta = pi): the harmonic measure of the arc seen from
        // (0, r) is (4/pi) atan(r).
        let r: f64 = 0.4;
        assert!((wedge_arc_probability(PI, r) - 4.0 / PI * r.atan()).abs() < 1e-12);
        assert!(wedge_arc_probability(1.5 * PI, 1e-9) < 1e-5);
    }
}
