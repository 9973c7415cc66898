use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::hypothesis::f_ratio;
use super::StatsError;
use crate::dataset::Paradigm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow {
    pub factor: String,
    pub ss: f64,
    pub df: usize,
    pub f: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable {
    /// First factor, second factor, interaction.
    pub rows: Vec<AnovaRow>,
    pub ss_error: f64,
    pub df_error: usize,
    pub ss_total: f64,
    pub n_per_cell: usize,
}

impl AnovaTable {
    pub fn row(&self, factor: &str) -> Option<&AnovaRow> {
        self.rows.iter().find(|r| r.factor == factor)
    }
}

/// Balanced fixed-effects two-way ANOVA with interaction. `cells[i][j]` holds
/// the replicates at level `i` of the first factor and `j` of the second.
pub fn anova_two_way(
    cells: &[Vec<Vec<f64>>],
    names: (&str, &str),
) -> Result<AnovaTable, StatsError> {
    let a = cells.len();
    let b = cells.first().map_or(0, |r| r.len());
    if a < 2 || b < 1 || cells.iter().any(|r| r.len() != b) {
        return Err(StatsError::Design(format!(
            "need >= 2 x 1 rectangular design, got {a} rows"
        )));
    }
    let n = cells[0][0].len();
    for (i, row) in cells.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            if c.is_empty() {
                return Err(StatsError::Design(format!("empty cell ({i}, {j})")));
            }
            if c.len() != n {
                return Err(StatsError::Design(format!(
                    "unbalanced design: cell ({i}, {j}) has {} values, expected {n}",
                    c.len()
                )));
            }
        }
    }
    if n < 2 {
        return Err(StatsError::Design(
            "one value per cell leaves no error term".into(),
        ));
    }
    let nf = n as f64;
    let cell_mean: Vec<Vec<f64>> = cells
        .iter()
        .map(|r| r.iter().map(|c| c.iter().sum::<f64>() / nf).collect())
        .collect();
    let grand = cell_mean.iter().flatten().sum::<f64>() / (a * b) as f64;
    let a_mean: Vec<f64> = cell_mean
        .iter()
        .map(|r| r.iter().sum::<f64>() / b as f64)
        .collect();
    let b_mean: Vec<f64> = (0..b)
        .map(|j| cell_mean.iter().map(|r| r[j]).sum::<f64>() / a as f64)
        .collect();

    let ss_a = (b as f64)
        * nf
        * a_mean
            .iter()
            .map(|m| (m - grand) * (m - grand))
            .sum::<f64>();
    let ss_b = (a as f64)
        * nf
        * b_mean
            .iter()
            .map(|m| (m - grand) * (m - grand))
            .sum::<f64>();
    let mut ss_ab = 0.0;
    let mut ss_e = 0.0;
    let mut ss_t = 0.0;
    for i in 0..a {
        for j in 0..b {
            let r = cell_mean[i][j] - a_mean[i] - b_mean[j] + grand;
            ss_ab += nf * r * r;
            for &v in &cells[i][j] {
                ss_e += (v - cell_mean[i][j]) * (v - cell_mean[i][j]);
                ss_t += (v - grand) * (v - grand);
            }
        }
    }
    let df_e = a * b * (n - 1);
    let ms_e = ss_e / df_e as f64;
    let mut rows = Vec::with_capacity(3);
    let mut push = |factor: String, ss: f64, df: usize| {
        let (f, p) = if df == 0 {
            (0.0, 1.0)
        } else {
            f_ratio(ss / df as f64, ms_e, df as f64, df_e as f64)
        };
        rows.push(AnovaRow {
            factor,
            ss,
            df,
            f,
            p,
        });
    };
    push(names.0.to_string(), ss_a, a - 1);
    push(names.1.to_string(), ss_b, b - 1);
    push(format!("{}:{}", names.0, names.1), ss_ab, (a - 1) * (b - 1));
    Ok(AnovaTable {
        rows,
        ss_error: ss_e,
        df_error: df_e,
        ss_total: ss_t,
        n_per_cell: n,
    })
}

/// Paradigm x channel design from `[epoch][channel]` powers. Each paradigm
/// contributes its first `min` epochs so that every cell has equal size.
pub fn paradigm_channel_anova(
    powers: &[Vec<f64>],
    paradigms: &[Paradigm],
) -> Result<AnovaTable, StatsError> {
    let groups: Vec<Vec<&Vec<f64>>> = Paradigm::ALL
        .iter()
        .map(|&p| {
            powers
                .iter()
                .zip(paradigms)
                .filter(|(_, q)| **q == p)
                .map(|(r, _)| r)
                .collect()
        })
        .collect();
    design_from_groups(&groups)
}

fn design_from_groups(groups: &[Vec<&Vec<f64>>]) -> Result<AnovaTable, StatsError> {
    let n = groups.iter().map(|g| g.len()).min().unwrap_or(0);
    if n == 0 {
        return Err(StatsError::Design("a paradigm has no epochs".into()));
    }
    let channels = groups[0][0].len();
    let cells: Vec<Vec<Vec<f64>>> = groups
        .iter()
        .map(|g| {
            (0..channels)
                .map(|c| g[..n].iter().map(|row| row[c]).collect())
                .collect()
        })
        .collect();
    anova_two_way(&cells, ("paradigm", "channel"))
}

/// Every (MI, VI, SI) subclass combination, 27 in all.
pub fn all_triples() -> Vec<[&'static str; 3]> {
    let mut out = Vec::with_capacity(27);
    for m in Paradigm::Mi.tasks() {
        for v in Paradigm::Vi.tasks() {
            for s in Paradigm::Si.tasks() {
                out.push([m, v, s]);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleResult {
    pub label: String,
    pub table: AnovaTable,
}

/// Paradigm x channel ANOVA restricted to one subclass of each paradigm.
pub fn grouped_class_anova(
    powers: &[Vec<f64>],
    paradigms: &[Paradigm],
    tasks: &[String],
    triples: &[[&str; 3]],
) -> Result<Vec<TripleResult>, StatsError> {
    triples
        .iter()
        .map(|triple| {
            let groups: Vec<Vec<&Vec<f64>>> = Paradigm::ALL
                .iter()
                .zip(triple)
                .map(|(&p, &task)| {
                    if !p.tasks().contains(&task) {
                        return Err(StatsError::UnknownClass(format!(
                            "{task} is not a {p} class"
                        )));
                    }
                    let rows: Vec<&Vec<f64>> = (0..powers.len())
                        .filter(|&i| paradigms[i] == p && tasks[i] == task)
                        .map(|i| &powers[i])
                        .collect();
                    if rows.is_empty() {
                        return Err(StatsError::Design(format!(
                            "no epochs for {p} class {task}"
                        )));
                    }
                    Ok(rows)
                })
                .collect::<Result<_, _>>()?;
            Ok(TripleResult {
                label: triple.join("-"),
                table: design_from_groups(&groups)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::hypothesis::one_way_anova;
    use super::*;
    use alloc::vec;

    #[test]
    fn constant_data_gives_zero_f() {
        let cells = vec![vec![vec![2.0; 4]; 3]; 2];
        let t = anova_two_way(&cells, ("a", "b")).unwrap();
        assert!(t.rows.iter().all(|r| r.f == 0.0 && r.p == 1.0));
    }

    #[test]
    fn single_column_matches_one_way() {
        let g = [
            vec![1.0, 2.5, 3.1, 0.2],
            vec![4.0, 5.5, 6.0, 3.3],
            vec![7.1, 8.0, 9.9, 6.6],
        ];
        let cells: Vec<Vec<Vec<f64>>> = g.iter().map(|v| vec![v.clone()]).collect();
        let t = anova_two_way(&cells, ("a", "b")).unwrap();
        let refs: Vec<&[f64]> = g.iter().map(|v| v.as_slice()).collect();
        let (f, _) = one_way_anova(&refs).unwrap();
        assert!((t.rows[0].f - f).abs() < 1e-10 * f);
    }

    #[test]
    fn sums_of_squares_add_up() {
        let cells: Vec<Vec<Vec<f64>>> = (0..3)
            .map(|i| {
                (0..4)
                    .map(|j| {
                        (0..5)
                            .map(|k| ((i * 7 + j * 3 + k) as f64 * 0.37).sin() + i as f64)
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let t = anova_two_way(&cells, ("a", "b")).unwrap();
        let sum: f64 = t.rows.iter().map(|r| r.ss).sum::<f64>() + t.ss_error;
        assert!((sum - t.ss_total).abs() < 1e-8 * t.ss_total);
        assert_eq!(t.df_error, 3 * 4 * 4);
    }

    #[test]
    fn design_errors() {
        let mut cells = vec![vec![vec![1.0, 2.0]; 2]; 2];
        cells[1][0].push(3.0);
        assert!(matches!(
            anova_two_way(&cells, ("a", "b")),
            Err(StatsError::Design(_))
        ));
        cells[1][0].clear();
        assert!(matches!(
            anova_two_way(&cells, ("a", "b")),
            Err(StatsError::Design(_))
        ));
    }

    #[test]
    fn twenty_seven_triples() {
        let t = all_triples();
        assert_eq!(t.len(), 27);
        assert_eq!(t[0], ["left", "split", "go"]);
    }

    #[test]
    fn unknown_class_is_rejected() {
        let powers = vec![vec![1.0]; 3];
        let p = [Paradigm::Mi, Paradigm::Vi, Paradigm::Si];
        let tasks: Vec<String> = ["left", "split", "go"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let r = grouped_class_anova(&powers, &p, &tasks, &[["left", "split", "jump"]]);
        assert!(matches!(r, Err(StatsError::UnknownClass(_))));
    }
}
