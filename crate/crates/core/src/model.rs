//! Bachelier (additive) price dynamics.
//!
//! `X(t) = x0 + μ t + σ W(t)`, with `μ = r` under no-arbitrage. Increments
//! over any step are exactly Gaussian, so paths are sampled without
//! discretization bias. Negative prices are allowed.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::fmt_sig;
use crate::rng::{standard_normal, stream_rng};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams<T> {
    pub x0: T,
    /// Drift μ of the price process. Equals `r` when `no_arbitrage` is set.
    pub drift: T,
    pub r: T,
    pub sigma: T,
    pub no_arbitrage: bool,
}

impl<T: Scalar> ModelParams<T> {
    /// Risk-neutral parameters (`drift = r`), validated.
    pub fn risk_neutral(x0: T, r: T, sigma: T) -> Result<Self> {
        validate_params(Self {
            x0,
            drift: r,
            r,
            sigma,
            no_arbitrage: true,
        })
    }

    /// Exploratory parameters with an independent drift `μ ≠ r`.
    pub fn with_drift(x0: T, drift: T, r: T, sigma: T) -> Result<Self> {
        validate_params(Self {
            x0,
            drift,
            r,
            sigma,
            no_arbitrage: false,
        })
    }
}

pub fn validate_params<T: Scalar>(p: ModelParams<T>) -> Result<ModelParams<T>> {
    for (field, v) in [("x0", p.x0), ("r", p.r), ("sigma", p.sigma), ("drift", p.drift)] {
        if !v.is_finite() {
            return Err(Error::invalid(field, format!("must be finite, got {v}")));
        }
    }
    if p.sigma < T::zero() {
        return Err(Error::invalid("sigma", format!("must be >= 0, got {}", p.sigma)));
    }
    if p.no_arbitrage && p.drift != p.r {
        return Err(Error::invalid(
            "drift",
            format!("must equal r = {} under no-arbitrage, got {}", p.r, p.drift),
        ));
    }
    Ok(p)
}

/// Monitoring times `0 = t_0 < t_1 < … < t_m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid<T> {
    times: Vec<T>,
}

impl<T: Scalar> TimeGrid<T> {
    pub fn new(times: Vec<T>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::invalid("grid", "needs at least two times"));
        }
        if times[0] != T::zero() {
            return Err(Error::invalid("grid", "first time must be exactly 0"));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("grid", "times must be finite"));
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "grid",
                format!("times must be strictly increasing (index {})", i + 1),
            ));
        }
        Ok(Self { times })
    }

    /// `steps + 1` equally spaced times on `[0, horizon]`; `t_i = horizon·i/steps`.
    pub fn uniform(horizon: T, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("steps", "must be >= 1"));
        }
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(Error::invalid("horizon", format!("must be positive, got {horizon}")));
        }
        let m = T::from_count(steps);
        Self::new((0..=steps).map(|i| horizon * T::from_count(i) / m).collect())
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> T {
        *self.times.last().expect("grid is non-empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianLaw<T> {
    pub mean: T,
    pub variance: T,
}

/// Marginal law of `X(t)`: mean `x0 + μ t`, variance `σ² t`.
pub fn exact_marginal<T: Scalar>(p: &ModelParams<T>, t: T) -> Result<GaussianLaw<T>> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::invalid("t", format!("must be a finite time >= 0, got {t}")));
    }
    Ok(GaussianLaw {
        mean: p.x0 + p.drift * t,
        variance: p.sigma * p.sigma * t,
    })
}

/// Simulated trajectories, stored row-major (one row per path).
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet<T> {
    grid: TimeGrid<T>,
    n_paths: usize,
    values: Vec<T>,
    seed: u64,
}

impl<T: Scalar> PathSet<T> {
    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self, i: usize) -> &[T] {
        let m = self.grid.len();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[T]> {
        self.values.chunks_exact(self.grid.len())
    }

    /// Values of every path at grid index `j`.
    pub fn column(&self, j: usize) -> impl Iterator<Item = T> + '_ {
        self.paths().map(move |p| p[j])
    }

    pub fn hitting_time(&self, i: usize, level: T) -> Result<HittingTime<T>> {
        first_hitting_time(self.path(i), self.grid.times(), level)
    }

    /// CSV with header `t,path_0,path_1,...` and one row per grid time.
    pub fn write_csv<W: Write>(&self, mut w: W, precision: usize) -> Result<()> {
        write!(w, "t")?;
        for i in 0..self.n_paths {
            write!(w, ",path_{i}")?;
        }
        writeln!(w)?;
        for (j, &t) in self.grid.times().iter().enumerate() {
            write!(w, "{}", fmt_sig(t, precision))?;
            for path in self.paths() {
                write!(w, ",{}", fmt_sig(path[j], precision))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Writes one path into `out` using stream `path_index` of `seed`.
///
/// `X(t_j) = x0 + μ t_j + σ W(t_j)` with `W` accumulated from exact
/// Gaussian increments, so `σ = 0` reproduces the drift line bit-for-bit.
fn fill_path<T: Scalar>(p: &ModelParams<T>, times: &[T], seed: u64, path_index: usize, out: &mut [T]) {
    let mut rng = stream_rng(seed, path_index as u64);
    let mut w = T::zero();
    out[0] = p.x0;
    for j in 1..times.len() {
        let dt = times[j] - times[j - 1];
        w = w + dt.sqrt() * standard_normal::<T>(&mut rng);
        out[j] = p.x0 + p.drift * times[j] + p.sigma * w;
    }
}

pub fn simulate_paths<T: Scalar>(
    p: &ModelParams<T>,
    grid: &TimeGrid<T>,
    n_paths: usize,
    seed: u64,
) -> Result<PathSet<T>> {
    let p = validate_params(*p)?;
    if n_paths == 0 {
        return Err(Error::invalid("n_paths", "must be >= 1"));
    }
    let grid = TimeGrid::new(grid.times.clone())?;
    let m = grid.len();
    let mut values = vec![T::zero(); n_paths * m];
    values
        .par_chunks_mut(m)
        .enumerate()
        .for_each(|(i, row)| fill_path(&p, grid.times(), seed, i, row));
    Ok(PathSet {
        grid,
        n_paths,
        values,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HittingTime<T> {
    /// First grid time at which the level is reached; `None` if never.
    pub value: Option<T>,
    pub index: Option<usize>,
}

/// First grid time at which `path` reaches `level`.
///
/// Paths starting at or below the level look for `X ≥ level`; paths starting
/// above look for `X ≤ level`. Only values up to the returned index are read.
pub fn first_hitting_time<T: Scalar>(path: &[T], times: &[T], level: T) -> Result<HittingTime<T>> {
    if path.is_empty() || path.len() != times.len() {
        return Err(Error::invalid(
            "path",
            format!("length {} does not match grid length {}", path.len(), times.len()),
        ));
    }
    let from_below = path[0] <= level;
    let index = path
        .iter()
        .position(|&x| if from_below { x >= level } else { x <= level });
    Ok(HittingTime {
        value: index.map(|i| times[i]),
        index,
    })
}

/// Closed-form `P(τ ≤ t)` for the first passage of `X` through `level`.
///
/// For `level > x0` with gap `b = level − x0`:
/// `Φ((−b + μt)/(σ√t)) + exp(2μb/σ²)·Φ((−b − μt)/(σ√t))`; the case
/// `level < x0` is the mirror image with `μ → −μ`.
pub fn hitting_probability<T: Scalar>(p: &ModelParams<T>, level: T, t: T) -> Result<T> {
    let p = validate_params(*p)?;
    if !level.is_finite() {
        return Err(Error::invalid("level", "must be finite"));
    }
    if !(t > T::zero()) || !t.is_finite() {
        return Err(Error::invalid("t", format!("must be positive, got {t}")));
    }
    if p.x0 == level {
        return Ok(T::one());
    }
    // Reduce to an up-crossing of height b > 0 with drift mu.
    let (b, mu) = if level > p.x0 {
        (level - p.x0, p.drift)
    } else {
        (p.x0 - level, -p.drift)
    };
    if p.sigma == T::zero() {
        return Ok(if mu * t >= b { T::one() } else { T::zero() });
    }
    let s = p.sigma * t.sqrt();
    let direct = ((mu * t - b) / s).norm_cdf();
    // exp(2μb/σ²)·Φ(·) evaluated in log space to avoid inf·0.
    let tail = ((-b - mu * t) / s).norm_cdf();
    let reflected = if tail > T::zero() {
        (T::lit(2.0) * mu * b / (p.sigma * p.sigma) + tail.ln()).exp()
    } else {
        T::zero()
    };
    Ok((direct + reflected).max(T::zero()).min(T::one()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HittingEstimate<T> {
    pub n_paths: usize,
    pub hits: usize,
    pub frequency: T,
    pub std_error: T,
}

/// Monte Carlo frequency of `{τ ≤ horizon}` on the grid.
///
/// Uses exactly the per-path streams of [`simulate_paths`], so path `i` here
/// is path `i` of a `PathSet` generated with the same inputs; paths are
/// regenerated on the fly rather than stored.
pub fn hitting_frequency<T: Scalar>(
    p: &ModelParams<T>,
    grid: &TimeGrid<T>,
    level: T,
    n_paths: usize,
    seed: u64,
) -> Result<HittingEstimate<T>> {
    let p = validate_params(*p)?;
    if n_paths == 0 {
        return Err(Error::invalid("n_paths", "must be >= 1"));
    }
    let times = grid.times();
    let hits = (0..n_paths)
        .into_par_iter()
        .map_init(
            || vec![T::zero(); times.len()],
            |buf, i| {
                fill_path(&p, times, seed, i, buf);
                let from_below = buf[0] <= level;
                buf.iter()
                    .any(|&x| if from_below { x >= level } else { x <= level }) as usize
            },
        )
        .sum::<usize>();
    let n = T::from_count(n_paths);
    let frequency = T::from_count(hits) / n;
    Ok(HittingEstimate {
        n_paths,
        hits,
        frequency,
        std_error: (frequency * (T::one() - frequency) / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rn(x0: f64, r: f64, sigma: f64) -> ModelParams<f64> {
        ModelParams::risk_neutral(x0, r, sigma).unwrap()
    }

    #[test]
    fn validation() {
        assert!(ModelParams::risk_neutral(100.0, 0.05, 0.2).is_ok());
        match ModelParams::risk_neutral(100.0, 0.05, -0.1) {
            Err(Error::InvalidParameter { field, .. }) => assert_eq!(field, "sigma"),
            other => panic!("{other:?}"),
        }
        match ModelParams::risk_neutral(f64::NAN, 0.05, 0.2) {
            Err(Error::InvalidParameter { field, .. }) => assert_eq!(field, "x0"),
            other => panic!("{other:?}"),
        }
        let bad = ModelParams {
            x0: 1.0,
            drift: 0.1,
            r: 0.05,
            sigma: 0.2,
            no_arbitrage: true,
        };
        assert!(matches!(
            validate_params(bad),
            Err(Error::InvalidParameter { field: "drift", .. })
        ));
        assert!(ModelParams::with_drift(1.0, 0.1, 0.05, 0.2).is_ok());
    }

    #[test]
    fn marginal_moments() {
        let law = exact_marginal(&rn(100.0, 0.05, 0.2), 4.0).unwrap();
        assert!((law.mean - 100.2).abs() < 1e-12);
        assert!((law.variance - 0.16).abs() < 1e-15);
        let law = exact_marginal(&rn(100.0, 0.05, 0.2), 0.0).unwrap();
        assert_eq!((law.mean, law.variance), (100.0, 0.0));
        let law = exact_marginal(&rn(0.0, 1.0, 1.0), 2.0).unwrap();
        assert_eq!((law.mean, law.variance), (2.0, 2.0));
        assert!(exact_marginal(&rn(0.0, 1.0, 1.0), -1.0).is_err());
    }

    #[test]
    fn grid_invariants() {
        assert!(TimeGrid::new(vec![0.0]).is_err());
        assert!(TimeGrid::new(vec![0.1, 0.2]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.2, 0.2]).is_err());
        assert!(TimeGrid::new(vec![0.0, f64::NAN]).is_err());
        let g = TimeGrid::uniform(1.0, 100).unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g.times()[50], 0.5);
        assert_eq!(g.horizon(), 1.0);
    }

    #[test]
    fn zero_volatility_paths_follow_drift_line() {
        let g = TimeGrid::new(vec![0.0, 0.5, 1.0]).unwrap();
        let ps = simulate_paths(&rn(0.0, 1.0, 0.0), &g, 4, 9).unwrap();
        for path in ps.paths() {
            assert_eq!(path, &[0.0, 0.5, 1.0]);
        }
        let g = TimeGrid::uniform(3.0, 300).unwrap();
        let p = rn(1.25, -0.37, 0.0);
        let ps = simulate_paths(&p, &g, 3, 1).unwrap();
        for path in ps.paths() {
            for (x, t) in path.iter().zip(g.times()) {
                assert_eq!(*x, p.x0 + p.drift * t);
            }
        }
    }

    #[test]
    fn first_column_is_x0_and_runs_repeat() {
        let g = TimeGrid::uniform(1.0, 20).unwrap();
        let p = rn(3.0, 0.1, 0.4);
        let a = simulate_paths(&p, &g, 50, 42).unwrap();
        let b = simulate_paths(&p, &g, 50, 42).unwrap();
        assert!(a.column(0).all(|x| x == 3.0));
        assert_eq!(a, b);
        let c = simulate_paths(&p, &g, 50, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn simulate_rejects_bad_inputs() {
        let g = TimeGrid::uniform(1.0, 2).unwrap();
        assert!(matches!(
            simulate_paths(&rn(0.0, 0.0, 1.0), &g, 0, 0),
            Err(Error::InvalidParameter { field: "n_paths", .. })
        ));
    }

    #[test]
    fn hitting_time_conventions() {
        let g = TimeGrid::uniform(1.0, 100).unwrap();
        let ps = simulate_paths(&rn(0.0, 1.0, 0.0), &g, 1, 0).unwrap();
        assert_eq!(ps.hitting_time(0, 0.5).unwrap().value, Some(0.5));
        assert_eq!(ps.hitting_time(0, 0.0).unwrap().value, Some(0.0));
        assert_eq!(ps.hitting_time(0, 2.0).unwrap().value, None);

        let times = [0.0, 1.0, 2.0];
        let h = first_hitting_time(&[0.0, 0.4, 0.6], &times, 0.5).unwrap();
        assert_eq!((h.value, h.index), (Some(2.0), Some(2)));
        // from above
        let h = first_hitting_time(&[1.0, 0.7, 0.2], &times, 0.5).unwrap();
        assert_eq!(h.value, Some(2.0));
        assert!(first_hitting_time(&[0.0, 1.0], &times, 0.5).is_err());
    }

    #[test]
    fn hitting_time_ignores_the_future() {
        let times: Vec<f64> = (0..6).map(f64::from).collect();
        let base = [0.0, 0.2, 0.9, 1.3, 0.1, 2.0];
        let tau = first_hitting_time(&base, &times, 1.0).unwrap();
        let mut altered = base;
        altered[4] = 50.0;
        altered[5] = -50.0;
        assert_eq!(first_hitting_time(&altered, &times, 1.0).unwrap(), tau);
        assert_eq!(tau.index, Some(3));
    }

    #[test]
    fn hitting_probability_closed_forms() {
        let p = hitting_probability(&rn(0.0, 0.0, 1.0), 1.0, 1.0).unwrap();
        assert!((p - 0.317310507862914).abs() < 1e-12);
        let p = hitting_probability(&rn(0.0, 1.0, 1.0), 1.0, 1.0).unwrap();
        assert!((p - 0.668102001223171).abs() < 1e-12);
        let p = hitting_probability(&rn(0.0, 1.0, 1.0), 1.0, 1e-8).unwrap();
        assert!(p < 1e-12);
        // mirrored: down-crossing with drift -1 is the up-crossing with drift +1
        let p = hitting_probability(&rn(1.0, -1.0, 1.0), 0.0, 1.0).unwrap();
        assert!((p - 0.668102001223171).abs() < 1e-12);
        assert_eq!(hitting_probability(&rn(1.0, 0.3, 1.0), 1.0, 1.0).unwrap(), 1.0);
        assert!(hitting_probability(&rn(0.0, 0.3, 1.0), 1.0, 0.0).is_err());
    }

    #[test]
    fn hitting_probability_degenerate_sigma() {
        assert_eq!(hitting_probability(&rn(0.0, 1.0, 0.0), 0.5, 1.0).unwrap(), 1.0);
        assert_eq!(hitting_probability(&rn(0.0, 1.0, 0.0), 1.5, 1.0).unwrap(), 0.0);
        assert_eq!(hitting_probability(&rn(0.0, -1.0, 0.0), 0.5, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn hitting_probability_extreme_drift_is_finite() {
        let p = hitting_probability(&rn(0.0, 500.0, 0.1), 1.0, 1.0).unwrap();
        assert!(p.is_finite() && (0.0..=1.0).contains(&p));
        assert!((p - 1.0).abs() < 1e-9);
    }

    #[test]
    fn streamed_frequency_matches_stored_paths() {
        let g = TimeGrid::uniform(1.0, 50).unwrap();
        let p = rn(0.0, 0.2, 1.0);
        let ps = simulate_paths(&p, &g, 500, 5).unwrap();
        let stored = (0..500)
            .filter(|&i| ps.hitting_time(i, 0.8).unwrap().value.is_some())
            .count();
        let est = hitting_frequency(&p, &g, 0.8, 500, 5).unwrap();
        assert_eq!(est.hits, stored);
    }

    #[test]
    fn csv_layout() {
        let g = TimeGrid::new(vec![0.0, 0.5, 1.0]).unwrap();
        let ps = simulate_paths(&rn(0.0, 1.0, 0.0), &g, 2, 0).unwrap();
        let mut out = Vec::new();
        ps.write_csv(&mut out, 15).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "t,path_0,path_1\n0,0,0\n0.5,0.5,0.5\n1,1,1\n"
        );
    }

    #[test]
    fn single_precision_paths() {
        let g = TimeGrid::<f32>::uniform(1.0, 10).unwrap();
        let p = ModelParams::<f32>::risk_neutral(0.0, 1.0, 0.0).unwrap();
        let ps = simulate_paths(&p, &g, 1, 0).unwrap();
        assert_eq!(ps.path(0)[10], 1.0);
    }
}
