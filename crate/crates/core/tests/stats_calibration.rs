use neurodeck_core::dataset::Paradigm;
use neurodeck_core::rng::{self, derive_seed};
use neurodeck_core::stats::{
    all_triples, grouped_class_anova, ks_uniform, levene, one_way_anova, paired_t,
    paradigm_channel_anova, shapiro_wilk,
};
use rand_distr::{Distribution, StandardNormal};

const SEEDS: u64 = 2000;
// KS critical value for n = 2000 at alpha = 0.001 is about 0.044
const D_MAX: f64 = 0.045;

fn normals(n: usize, r: &mut rng::Rng) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(r)).collect()
}

fn null_p_values(test: u64, mut draw: impl FnMut(&mut rng::Rng) -> f64) -> Vec<f64> {
    (0..SEEDS)
        .map(|s| draw(&mut rng::rng(derive_seed(derive_seed(31, test), s))))
        .collect()
}

fn assert_uniform(name: &str, p: &[f64]) {
    let (d, pv) = ks_uniform(p).unwrap();
    assert!(d < D_MAX, "{name}: D = {d} (p = {pv})");
}

#[test]
fn shapiro_wilk_null_is_uniform_across_sizes() {
    for (k, n) in [30usize, 50, 200].into_iter().enumerate() {
        let p = null_p_values(k as u64, |r| shapiro_wilk(&normals(n, r)).unwrap().1);
        assert_uniform(&format!("shapiro n={n}"), &p);
    }
}

#[test]
fn shapiro_wilk_matches_reference_values() {
    let x = [
        0.3, -1.2, 2.2, 0.1, 0.5, -0.7, 1.4, -0.2, 0.9, -1.9, 0.05, 0.66,
    ];
    let (w, p) = shapiro_wilk(&x).unwrap();
    assert!((w - 0.9891569287249607).abs() < 1e-6, "{w}");
    assert!((p - 0.9995635843381376).abs() < 1e-4, "{p}");
}

#[test]
fn levene_and_one_way_null_are_uniform() {
    let lev = null_p_values(10, |r| {
        let g: Vec<Vec<f64>> = (0..3).map(|_| normals(25, r)).collect();
        levene(&[&g[0], &g[1], &g[2]]).unwrap().1
    });
    assert_uniform("levene", &lev);
    let one = null_p_values(11, |r| {
        let g: Vec<Vec<f64>> = (0..4).map(|_| normals(8, r)).collect();
        one_way_anova(&[&g[0], &g[1], &g[2], &g[3]]).unwrap().1
    });
    assert_uniform("one-way", &one);
}

#[test]
fn paired_t_null_is_uniform() {
    let p = null_p_values(12, |r| {
        let (a, b) = (normals(15, r), normals(15, r));
        paired_t(&a, &b).unwrap().p_raw.unwrap()
    });
    assert_uniform("paired t", &p);
}

#[test]
fn two_way_rows_are_uniform_under_null() {
    let labels: Vec<Paradigm> = Paradigm::ALL.iter().flat_map(|&p| [p; 6]).collect();
    let mut rows = [Vec::new(), Vec::new(), Vec::new()];
    for s in 0..SEEDS {
        let mut r = rng::rng(derive_seed(derive_seed(31, 13), s));
        let powers: Vec<Vec<f64>> = (0..18).map(|_| normals(8, &mut r)).collect();
        let t = paradigm_channel_anova(&powers, &labels).unwrap();
        for (k, row) in t.rows.iter().enumerate() {
            rows[k].push(row.p);
        }
    }
    for (name, p) in ["paradigm", "channel", "interaction"].iter().zip(&rows) {
        assert_uniform(name, p);
    }
}

#[test]
fn grouped_triples_isolate_the_shifted_subclass() {
    let mut r = rng::rng(77);
    let mut powers = Vec::new();
    let mut paradigms = Vec::new();
    let mut tasks = Vec::new();
    for p in Paradigm::ALL {
        for task in p.tasks() {
            for _ in 0..8 {
                let shift = if task == Paradigm::Mi.tasks()[0] {
                    3.0
                } else {
                    0.0
                };
                powers.push(
                    normals(16, &mut r)
                        .into_iter()
                        .map(|v| v + shift)
                        .collect::<Vec<_>>(),
                );
                paradigms.push(p);
                tasks.push(task.to_string());
            }
        }
    }
    let triples = all_triples();
    assert_eq!(triples.len(), 27);
    let res = grouped_class_anova(&powers, &paradigms, &tasks, &triples).unwrap();
    for (triple, t) in triples.iter().zip(&res) {
        let p = t.table.row("paradigm").unwrap().p;
        assert_eq!(t.label, triple.join("-"));
        if triple[0] == Paradigm::Mi.tasks()[0] {
            assert!(p < 1e-6, "{}: {p}", t.label);
        } else {
            assert!(t.table.n_per_cell == 8);
        }
    }
    let bad = ["nope", Paradigm::Vi.tasks()[0], Paradigm::Si.tasks()[0]];
    assert!(grouped_class_anova(&powers, &paradigms, &tasks, &[bad]).is_err());
}
