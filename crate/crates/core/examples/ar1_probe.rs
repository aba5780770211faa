use nowcast_core::datamodel::ChannelId;
use nowcast_core::forecast::{fit_sarima, ChannelCountSeries};
use nowcast_core::period::{Half, HalfYearPeriod};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() {
    let phi = 0.7;
    let normal = Normal::new(0.0, 1.0).unwrap();
    for seed in 0..12u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = vec![0.0f64];
        for _ in 1..200 {
            let prev = *values.last().unwrap();
            values.push(phi * prev + normal.sample(&mut rng));
        }
        let values: Vec<f64> = values.iter().map(|v| v + 50.0).collect();
        let start = HalfYearPeriod::new(1950, Half::H1);
        let s = ChannelCountSeries::new(
            ChannelId::new("x"),
            values.iter().enumerate().map(|(i, &v)| (start.offset(i as i64), v)).collect(),
        ).unwrap();
        let t0 = std::time::Instant::now();
        let m = fit_sarima(&s).unwrap();
        println!("seed {seed}: selected {} ar={:?} aic={:.2} ({} ms)", m.order, m.ar, m.aic, t0.elapsed().as_millis());
    }
}
