//! Complexity estimates via the coding theorem, rank comparisons between
//! distributions, runtime tables and summary statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::checkpoint::ShardCheckpoint;
use crate::distribution::{canonical_order, format_sig, Distribution};
use crate::error::{CtmError, Result};

pub const COMPLEXITY_MAGIC: &str = "ctm-complexity v1";

/// `-log2` of the string's probability, in bits.
pub fn complexity_of(dist: &Distribution, s: &str) -> Result<f64> {
    dist.probability(s)
        .map(|p| -p.log2())
        .ok_or_else(|| CtmError::NotProduced {
            string: s.to_string(),
            states: dist.states,
        })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityRow {
    pub string: String,
    pub probability: f64,
    pub complexity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityTable {
    pub states: u32,
    /// Ascending complexity; ties by length, then lexicographic.
    pub rows: Vec<ComplexityRow>,
}

impl ComplexityTable {
    /// Export with `offset` subtracted from every complexity (0 for raw
    /// values).
    pub fn to_text(&self, offset: f64) -> String {
        let mut out = format!("{COMPLEXITY_MAGIC} n={}\n", self.states);
        for row in &self.rows {
            writeln!(
                out,
                "{}\t{}\t{}",
                row.string,
                format_sig(row.probability),
                format_sig(row.complexity - offset)
            )
            .unwrap();
        }
        out
    }

    pub fn get(&self, s: &str) -> Option<&ComplexityRow> {
        self.rows.iter().find(|r| r.string == s)
    }
}

pub fn complexity_table(dist: &Distribution, length: Option<usize>) -> ComplexityTable {
    let rows = dist
        .ranked()
        .into_iter()
        .filter(|(s, _)| length.is_none_or(|l| s.len() == l))
        .map(|(s, c)| {
            let probability = dist.ratio(c);
            ComplexityRow {
                string: s.to_string(),
                probability,
                complexity: -probability.log2(),
            }
        })
        .collect();
    ComplexityTable {
        states: dist.states,
        rows,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankComparison {
    pub common_strings: usize,
    pub spearman: f64,
    /// Strings whose position differs between the two rankings.
    pub displaced: usize,
    /// 1-based position in the coarse ranking of the first displaced string.
    pub first_displaced: Option<usize>,
    pub max_rank_distance: f64,
    pub mean_rank_distance: f64,
    pub stddev_rank_distance: f64,
}

/// Ranks with ties sharing the mean of the positions they span (1-based).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman's coefficient: Pearson correlation of the average ranks.
/// Identical rankings give 1; a constant ranking against a varying one
/// gives 0.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return 1.0;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    if rx == ry {
        return 1.0;
    }
    pearson(&rx, &ry)
}

/// Compares the ranking of `coarse`'s strings with their ranking in `fine`.
/// Both rankings use the canonical order restricted to the common strings.
pub fn compare_rankings(coarse: &Distribution, fine: &Distribution) -> Result<RankComparison> {
    if coarse.states > fine.states {
        return Err(CtmError::InvalidComparison(format!(
            "coarse n={} exceeds fine n={}",
            coarse.states, fine.states
        )));
    }
    let coarse_order: Vec<&str> = coarse
        .ranked()
        .into_iter()
        .filter(|(s, _)| fine.counts.contains_key(*s))
        .map(|(s, _)| s)
        .collect();
    if coarse_order.is_empty() {
        return Err(CtmError::EmptyIntersection);
    }
    let mut fine_order: Vec<(&str, u64)> =
        coarse_order.iter().map(|s| (*s, fine.counts[*s])).collect();
    fine_order.sort_by(|a, b| canonical_order(*a, *b));
    let fine_pos: BTreeMap<&str, usize> = fine_order
        .iter()
        .enumerate()
        .map(|(i, (s, _))| (*s, i + 1))
        .collect();

    let coarse_ranks: Vec<f64> = (1..=coarse_order.len()).map(|r| r as f64).collect();
    let fine_ranks: Vec<f64> = coarse_order.iter().map(|s| fine_pos[s] as f64).collect();
    let distances: Vec<(usize, f64)> = coarse_ranks
        .iter()
        .zip(&fine_ranks)
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(i, (a, b))| (i + 1, (a - b).abs()))
        .collect();
    let displaced = distances.len();
    let (max, mean, sd) = if displaced == 0 {
        (0.0, 0.0, 0.0)
    } else {
        let d: Vec<f64> = distances.iter().map(|x| x.1).collect();
        let m = Moments::of(&d);
        (
            d.iter().cloned().fold(0.0, f64::max),
            m.mean,
            m.variance.sqrt(),
        )
    };
    Ok(RankComparison {
        common_strings: coarse_order.len(),
        spearman: spearman(&coarse_ranks, &fine_ranks),
        displaced,
        first_displaced: distances.first().map(|x| x.0),
        max_rank_distance: max,
        mean_rank_distance: mean,
        stddev_rank_distance: sd,
    })
}

/// Joint (output length, halting step) histogram of a checkpoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuntimeTables {
    pub halting: u64,
    pub joint: BTreeMap<(u32, u32), u64>,
}

pub fn runtime_tables(checkpoint: &ShardCheckpoint) -> RuntimeTables {
    RuntimeTables {
        halting: checkpoint.halting,
        joint: checkpoint.joint.clone(),
    }
}

impl RuntimeTables {
    pub fn step_total(&self, steps: u32) -> u64 {
        self.joint
            .iter()
            .filter(|((_, t), _)| *t == steps)
            .map(|(_, c)| c)
            .sum()
    }

    /// `P(length | step)`; 0 when nothing halts at `steps`.
    pub fn conditional(&self, length: u32, steps: u32) -> f64 {
        let total = self.step_total(steps);
        if total == 0 {
            return 0.0;
        }
        self.joint.get(&(length, steps)).copied().unwrap_or(0) as f64 / total as f64
    }

    /// `P(length, step)` over all halting runs.
    pub fn joint_probability(&self, length: u32, steps: u32) -> f64 {
        self.joint.get(&(length, steps)).copied().unwrap_or(0) as f64 / self.halting as f64
    }

    pub fn max_length(&self) -> u32 {
        self.joint.keys().map(|k| k.0).max().unwrap_or(0)
    }

    pub fn max_steps(&self) -> u32 {
        self.joint.keys().map(|k| k.1).max().unwrap_or(0)
    }

    fn csv(&self, max_length: u32, max_steps: u32, cell: impl Fn(u32, u32) -> f64) -> String {
        let mut out = String::from("length");
        for t in 1..=max_steps {
            write!(out, ",t={t}").unwrap();
        }
        out.push('\n');
        for l in 1..=max_length {
            write!(out, "{l}").unwrap();
            for t in 1..=max_steps {
                let v = cell(l, t);
                if v == 0.0 {
                    out.push_str(",0");
                } else {
                    write!(out, ",{}", format_sig(v)).unwrap();
                }
            }
            out.push('\n');
        }
        out
    }

    /// Length rows by step columns, each column normalized to 1.
    pub fn conditional_csv(&self, max_length: u32, max_steps: u32) -> String {
        self.csv(max_length, max_steps, |l, t| self.conditional(l, t))
    }

    pub fn joint_csv(&self, max_length: u32, max_steps: u32) -> String {
        self.csv(max_length, max_steps, |l, t| self.joint_probability(l, t))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    /// Fourth standardized moment (3 for a normal distribution).
    pub kurtosis: f64,
}

impl Moments {
    /// Population moments.
    pub fn of(values: &[f64]) -> Moments {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let central = |k: i32| values.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
        let variance = central(2);
        let (skewness, kurtosis) = if variance > 0.0 {
            (
                central(3) / variance.powf(1.5),
                central(4) / (variance * variance),
            )
        } else {
            (0.0, 0.0)
        };
        Moments {
            mean,
            variance,
            skewness,
            kurtosis,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SummaryStats {
    pub strings: usize,
    pub mean: f64,
    /// Lower middle value for an even count.
    pub median: f64,
    pub median_midpoint: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub excess_kurtosis: f64,
}

/// Moments of the probabilities of the produced strings of one length,
/// conditioned on that length (so the values sum to 1 and the mean is one
/// over the number of strings).
pub fn summary_stats(dist: &Distribution, length: usize) -> Result<SummaryStats> {
    let counts: Vec<u64> = dist
        .counts
        .iter()
        .filter(|(s, _)| s.len() == length)
        .map(|(_, &c)| c)
        .collect();
    if counts.is_empty() {
        return Err(CtmError::NoStringsOfLength(length));
    }
    let total: u64 = counts.iter().sum();
    let mut values: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    let (median, median_midpoint) = if values.len() % 2 == 1 {
        (values[mid], values[mid])
    } else {
        (values[mid - 1], (values[mid - 1] + values[mid]) / 2.0)
    };
    let m = Moments::of(&values);
    Ok(SummaryStats {
        strings: values.len(),
        mean: m.mean,
        median,
        median_midpoint,
        variance: m.variance,
        skewness: m.skewness,
        kurtosis: m.kurtosis,
        excess_kurtosis: m.kurtosis - 3.0,
    })
}

/// Strings ranked above at least one strictly shorter string, in rank
/// order.
pub fn misplaced_strings(dist: &Distribution) -> Vec<String> {
    let ranked = dist.ranked();
    let mut shortest_below = usize::MAX;
    let mut out = Vec::new();
    for (s, _) in ranked.iter().rev() {
        if shortest_below < s.len() {
            out.push(s.to_string());
        }
        shortest_below = shortest_below.min(s.len());
    }
    out.reverse();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(states: u32, counts: &[(&str, u64)]) -> Distribution {
        Distribution {
            states,
            halting_total: counts.iter().map(|c| c.1).sum(),
            counts: counts.iter().map(|&(s, c)| (s.to_string(), c)).collect(),
        }
    }

    #[test]
    fn complexity_values() {
        let d = dist(1, &[("0", 1), ("1", 1)]);
        assert_eq!(complexity_of(&d, "0").unwrap(), 1.0);
        assert!(matches!(
            complexity_of(&d, "01"),
            Err(CtmError::NotProduced { .. })
        ));
        let t = complexity_table(&d, None);
        assert!(t.rows.iter().all(|r| r.complexity == 1.0));
        assert_eq!(t.to_text(0.0), "ctm-complexity v1 n=1\n0\t5.00000000000e-1\t1.00000000000e0\n1\t5.00000000000e-1\t1.00000000000e0\n");
        assert!(t.to_text(1.0).contains("\t0.00000000000e0\n"));
    }

    #[test]
    fn complexity_table_filters_and_orders() {
        let d = dist(2, &[("0", 8), ("1", 8), ("01", 3), ("00", 4), ("111", 1)]);
        let t = complexity_table(&d, None);
        let order: Vec<&str> = t.rows.iter().map(|r| r.string.as_str()).collect();
        assert_eq!(order, ["0", "1", "00", "01", "111"]);
        assert!(t
            .rows
            .windows(2)
            .all(|w| w[0].complexity <= w[1].complexity));
        let t2 = complexity_table(&d, Some(2));
        assert_eq!(t2.rows.len(), 2);
    }

    #[test]
    fn spearman_edge_cases() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 1.0);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert_eq!(
            average_ranks(&[10.0, 20.0, 20.0, 5.0]),
            vec![2.0, 3.5, 3.5, 1.0]
        );
        // tied scores: rho = 1 - 6 sum d^2 / (n (n^2 - 1)) does not apply; compare to
        // the Pearson definition computed by hand: ranks x=[1,2,3], y=[1.5,1.5,3]
        let r = spearman(&[1.0, 2.0, 3.0], &[1.0, 1.0, 2.0]);
        assert!((r - 0.866_025_403_784_438_6).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]), 0.0);
    }

    #[test]
    fn self_comparison_is_perfect() {
        let d = dist(2, &[("0", 8), ("1", 8), ("01", 3), ("00", 4)]);
        let c = compare_rankings(&d, &d).unwrap();
        assert_eq!(c.spearman, 1.0);
        assert_eq!(c.displaced, 0);
        assert_eq!(c.first_displaced, None);
        assert_eq!(c.common_strings, 4);
    }

    #[test]
    fn reversed_ranking() {
        let a = dist(1, &[("0", 3), ("1", 2), ("00", 1)]);
        let b = dist(2, &[("0", 1), ("1", 2), ("00", 3), ("11", 9)]);
        let c = compare_rankings(&a, &b).unwrap();
        assert!((c.spearman + 1.0).abs() < 1e-15);
        assert_eq!(c.displaced, 2);
        assert_eq!(c.first_displaced, Some(1));
        assert_eq!(c.max_rank_distance, 2.0);
        assert_eq!(c.mean_rank_distance, 2.0);
        assert!(compare_rankings(&b, &a).is_err());
        assert!(matches!(
            compare_rankings(&dist(1, &[("01", 1)]), &b),
            Err(CtmError::EmptyIntersection)
        ));
    }

    #[test]
    fn moments_and_stats() {
        let d = dist(1, &[("0", 5), ("1", 5)]);
        let s = summary_stats(&d, 1).unwrap();
        assert_eq!(s.mean, 0.5);
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.median, 0.5);
        assert!(summary_stats(&d, 2).is_err());
        let d = dist(2, &[("00", 1), ("01", 2), ("10", 3), ("11", 4)]);
        let s = summary_stats(&d, 2).unwrap();
        assert_eq!(s.median, 0.2);
        assert!((s.median_midpoint - 0.25).abs() < 1e-15);
        // population moments of 1,2,3,4,10 computed by hand
        let m = Moments::of(&[1.0, 2.0, 3.0, 4.0, 10.0]);
        assert_eq!(m.mean, 4.0);
        assert_eq!(m.variance, 10.0);
        assert!((m.skewness - 36.0 / 10f64.powf(1.5)).abs() < 1e-12);
        assert!((m.kurtosis - 1394.0 / 5.0 / 100.0).abs() < 1e-12);
    }

    #[test]
    fn misplaced() {
        let d = dist(
            3,
            &[
                ("0", 9),
                ("1", 9),
                ("0101", 5),
                ("00", 4),
                ("11", 4),
                ("000", 1),
            ],
        );
        assert_eq!(misplaced_strings(&d), ["0101"]);
        assert!(misplaced_strings(&dist(1, &[("0", 1), ("1", 1)])).is_empty());
    }

    #[test]
    fn runtime_table_normalization() {
        let joint = BTreeMap::from([((1, 1), 4u64), ((2, 2), 2), ((2, 3), 1), ((3, 3), 3)]);
        let t = RuntimeTables { halting: 10, joint };
        assert_eq!(t.conditional(1, 1), 1.0);
        assert_eq!(t.conditional(2, 3), 0.25);
        assert_eq!(t.conditional(2, 9), 0.0);
        assert_eq!(t.joint_probability(1, 1), 0.4);
        assert_eq!(
            t.conditional_csv(2, 3),
            "length,t=1,t=2,t=3\n1,1.00000000000e0,0,0\n2,0,1.00000000000e0,2.50000000000e-1\n"
        );
    }
}
