//! Gray-labeled square QAM with unit average energy.
//!
//! A label is an integer whose high half holds the in-phase bits and whose low
//! half holds the quadrature bits, most significant bit first. Each half is
//! Gray-decoded to a level index g, and the amplitude is (2g - (L - 1)) times
//! the normalization, so label 0 is the bottom-left corner point.
//!
//! | modulation | bits | per-axis levels | normalization |
//! |------------|------|-----------------|---------------|
//! | QPSK       | 2    | ±1              | 1/sqrt(2)     |
//! | 16-QAM     | 4    | ±1, ±3          | 1/sqrt(10)    |
//! | 64-QAM     | 6    | ±1, ±3, ±5, ±7  | 1/sqrt(42)    |

use std::fmt;
use std::str::FromStr;

use crate::linalg::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "16qam",
            Modulation::Qam64 => "64qam",
        })
    }
}

impl FromStr for Modulation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" | "4qam" => Ok(Modulation::Qpsk),
            "16qam" | "qam16" => Ok(Modulation::Qam16),
            "64qam" | "qam64" => Ok(Modulation::Qam64),
            other => Err(format!("unknown modulation '{other}' (expected qpsk, 16qam or 64qam)")),
        }
    }
}

fn gray_to_binary(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    modulation: Modulation,
    bits: usize,
    /// per-axis amplitude indexed by axis label
    axis: Vec<f64>,
    points: Vec<C64>,
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        let bits = modulation.bits_per_symbol();
        let half = bits / 2;
        let levels = 1usize << half;
        let norm = match modulation {
            Modulation::Qpsk => 2f64,
            Modulation::Qam16 => 10.0,
            Modulation::Qam64 => 42.0,
        }
        .sqrt()
        .recip();
        let axis: Vec<f64> = (0..levels)
            .map(|label| (2.0 * gray_to_binary(label) as f64 - (levels - 1) as f64) * norm)
            .collect();
        let mask = levels - 1;
        let points = (0..1usize << bits).map(|l| C64::new(axis[l >> half], axis[l & mask])).collect();
        Constellation { modulation, bits, axis, points }
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    /// Points indexed by label.
    pub fn points(&self) -> &[C64] {
        &self.points
    }

    /// Bit `b` (0 = most significant) of a label.
    pub fn bit(&self, label: usize, b: usize) -> u8 {
        ((label >> (self.bits - 1 - b)) & 1) as u8
    }

    /// Labels whose bit `b` equals `value`.
    pub fn subset(&self, b: usize, value: u8) -> Vec<usize> {
        (0..self.points.len()).filter(|&l| self.bit(l, b) == value).collect()
    }

    /// Mean symbol energy (1 up to rounding).
    pub fn es(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    pub fn label_of(&self, bits: &[u8]) -> usize {
        debug_assert_eq!(bits.len(), self.bits);
        bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)
    }

    pub fn map(&self, bits: &[u8]) -> C64 {
        self.points[self.label_of(bits)]
    }

    /// Label of the nearest point.
    pub fn nearest(&self, z: C64) -> usize {
        let half = self.bits / 2;
        let pick = |x: f64| {
            (0..self.axis.len())
                .min_by(|&a, &b| (x - self.axis[a]).abs().total_cmp(&(x - self.axis[b]).abs()))
                .expect("nonempty axis")
        };
        (pick(z.re) << half) | pick(z.im)
    }

    /// Max-log LLRs rho * (min_{bit=0} |z - a|^2 - min_{bit=1} |z - a|^2) of
    /// all bits, written to `out`. Positive values favor bit 1.
    ///
    /// On a square grid the distance splits into in-phase and quadrature
    /// parts, and the part on the other axis is common to both minima, so each
    /// bit only needs a scan over one axis.
    pub fn max_log_llrs(&self, z: C64, rho: f64, out: &mut [f64]) {
        let half = self.bits / 2;
        debug_assert_eq!(out.len(), self.bits);
        let (re_bits, im_bits) = out.split_at_mut(half);
        for (axis_value, dst) in [(z.re, re_bits), (z.im, im_bits)] {
            for (j, llr) in dst.iter_mut().enumerate() {
                let shift = half - 1 - j;
                let mut best = [f64::INFINITY; 2];
                for (label, &a) in self.axis.iter().enumerate() {
                    let d = (axis_value - a) * (axis_value - a);
                    let slot = &mut best[(label >> shift) & 1];
                    if d < *slot {
                        *slot = d;
                    }
                }
                *llr = rho * (best[0] - best[1]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qpsk_points() {
        let c = Constellation::new(Modulation::Qpsk);
        let s = 0.5f64.sqrt();
        for p in c.points() {
            assert!((p.re.abs() - s).abs() < 1e-15 && (p.im.abs() - s).abs() < 1e-15);
        }
        assert!((c.es() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_energy_and_labeling_fixture() {
        for m in [Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64] {
            assert!((Constellation::new(m).es() - 1.0).abs() < 1e-12, "{m}");
        }
        let c = Constellation::new(Modulation::Qam16);
        let s = 10f64.sqrt();
        assert_eq!(c.points()[0], C64::new(-3.0 / s, -3.0 / s));
        // 0b0110: I bits 01 -> level 1 (-1), Q bits 10 -> level 3 (+3)
        assert_eq!(c.points()[0b0110], C64::new(-1.0 / s, 3.0 / s));
        assert_eq!(c.points()[0b1010], C64::new(3.0 / s, 3.0 / s));
    }

    #[test]
    fn gray_neighbors_differ_in_one_bit() {
        for m in [Modulation::Qam16, Modulation::Qam64] {
            let c = Constellation::new(m);
            let step = 2.0 * c.points().iter().map(|p| p.re.abs()).fold(f64::INFINITY, f64::min);
            for (a, pa) in c.points().iter().enumerate() {
                for (b, pb) in c.points().iter().enumerate() {
                    if ((pa - pb).norm() - step).abs() < 1e-9 {
                        assert_eq!((a ^ b).count_ones(), 1, "{m}: {a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn subsets_partition() {
        let c = Constellation::new(Modulation::Qam64);
        for b in 0..6 {
            let mut all = c.subset(b, 0);
            all.extend(c.subset(b, 1));
            all.sort_unstable();
            assert_eq!(all, (0..64).collect::<Vec<_>>());
            assert_eq!(c.subset(b, 0).len(), 32);
        }
    }

    #[test]
    fn nearest_inverts_map() {
        let c = Constellation::new(Modulation::Qam64);
        for (l, &p) in c.points().iter().enumerate() {
            assert_eq!(c.nearest(p + C64::new(0.01, -0.01)), l);
        }
    }

    #[test]
    fn parses_names() {
        assert_eq!("16QAM".parse::<Modulation>().unwrap(), Modulation::Qam16);
        assert!("8psk".parse::<Modulation>().is_err());
        assert_eq!(Modulation::Qam64.to_string(), "64qam");
    }
}
