//! Ground-truth checks of the synthetic world against the qualitative bands.
//!
//! Every number here comes from the generator itself (no learned model), so it
//! shows what a perfect model could reach.

use pourcause::intervention::linspace;
use pourcause::rng::seeded;
use pourcause::world::{FU_SUPPORT, RC_SUPPORT, RD_SUPPORT};
use pourcause::{Trial, WorldConfig};

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn main() {
    let w = WorldConfig::default();
    let pop = w.generate_dataset(20_000, 99);
    let mut rng = seeded(5);
    // pack-noise draws reused across every do(RC) point
    let eps: Vec<f64> = (0..pop.len()).map(|_| w.derive_rv(1.0, 1.0, &mut rng)).collect();

    let spill_rate = mean(pop.iter().map(|t| f64::from(u8::from(t.spillage))));
    println!("spill rate {spill_rate:.3}");

    let do_rc: Vec<f64> = linspace(RC_SUPPORT.0, RC_SUPPORT.1, 16)
        .iter()
        .map(|&rc| mean(pop.iter().zip(&eps).map(|(t, e)| w.spill_probability(t.fu, t.rd, t.fu / rc * e))))
        .collect();
    let (lo, hi) = do_rc.iter().fold((1.0f64, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    println!("P(S|do(RC)) in [{lo:.3}, {hi:.3}]  band [0.3, 0.6]");

    for rd in [0.5, 0.7, 0.9, 1.0, 1.1, 1.2, 1.5] {
        let p = mean(pop.iter().map(|t| w.spill_probability(t.fu, rd, t.rv)));
        println!("P(S|do(RD={rd})) {p:.3}");
    }
    for rv in [0.5, 1.0, 1.5, 2.0] {
        let p = mean(pop.iter().map(|t| w.spill_probability(t.fu, t.rd, rv)));
        println!("P(S|do(RV={rv})) {p:.3}");
    }

    let spills: Vec<&Trial> = pop.iter().filter(|t| t.spillage).take(2000).collect();
    let covered = |f: &dyn Fn(&Trial, f64) -> f64, (lo, hi): (f64, f64)| {
        let grid = linspace(lo, hi, 101);
        spills.iter().filter(|t| grid.iter().any(|&x| f(t, x) < 0.1)).count() as f64 / spills.len() as f64
    };
    let rd = covered(&|t, rd| w.spill_probability(t.fu, rd, t.rv), RD_SUPPORT);
    let fu = covered(&|t, fu| w.spill_probability(fu, t.rd, fu / t.rc), FU_SUPPORT);
    let rc = covered(&|t, rc| w.spill_probability(t.fu, t.rd, t.fu / rc), RC_SUPPORT);
    println!("oracle coverage at 0.1: RD {rd:.3} (>= 0.8)  FU {fu:.3} (>= 0.4)  RC {rc:.3} (< 0.15)");
}
