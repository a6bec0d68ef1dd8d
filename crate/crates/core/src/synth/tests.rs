use super::*;
use crate::table::{ColumnSpec, RoleSet};

fn num_schema() -> Arc<Schema> {
    Arc::new(
        Schema::new(vec![
            ColumnSpec::numeric("v", RoleSet::NONE),
            ColumnSpec::categorical("label", RoleSet::TARGET, &["a", "b"]),
        ])
        .unwrap(),
    )
}

fn num_table(values: &[f64]) -> Table {
    let rows = values
        .iter()
        .enumerate()
        .map(|(i, &v)| vec![Cell::Num(v), Cell::Cat(i % 2)])
        .collect();
    Table::new(num_schema(), rows).unwrap()
}

/// Two categorical columns with the given paired codes; `y` is the target.
fn paired_cat_table(pairs: &[(usize, usize)]) -> Table {
    let schema = Arc::new(
        Schema::new(vec![
            ColumnSpec::categorical("x", RoleSet::NONE, &["x0", "x1"]),
            ColumnSpec::categorical("y", RoleSet::TARGET, &["y0", "y1"]),
        ])
        .unwrap(),
    );
    let rows = pairs
        .iter()
        .map(|&(a, b)| vec![Cell::Cat(a), Cell::Cat(b)])
        .collect();
    Table::new(schema, rows).unwrap()
}

#[test]
fn discretize_assigns_equal_width_bins() {
    let t = num_table(&[0.0, 10.0]);
    let d = discretize(&t, 2).unwrap();
    assert_eq!(d.edges[0], vec![0.0, 5.0, 10.0]);
    assert_eq!(d.codes[0][0], 0);
    assert_eq!(d.codes[1][0], 1);
    assert!(d.degenerate.is_empty());
}

#[test]
fn discretize_flags_constant_columns() {
    let t = num_table(&[3.0, 3.0, 3.0]);
    let d = discretize(&t, 5).unwrap();
    assert_eq!(d.degenerate, vec![0]);
    assert_eq!(d.domains[0], 1);
    assert!(d.codes.iter().all(|r| r[0] == 0));
}

#[test]
fn discretize_passes_categoricals_through() {
    let t = paired_cat_table(&[(0, 1), (1, 0)]);
    let d = discretize(&t, 4).unwrap();
    assert_eq!(d.domains, vec![2, 2]);
    assert_eq!(d.codes, vec![vec![0, 1], vec![1, 0]]);
    assert!(d.edges.iter().all(Vec::is_empty));
}

#[test]
fn mutual_information_of_independent_uniform_is_zero() {
    // exact 4-row product table
    let t = paired_cat_table(&[(0, 0), (0, 1), (1, 0), (1, 1)]);
    let d = discretize(&t, 2).unwrap();
    assert_eq!(mutual_information(&d, 0, &[1]).unwrap(), 0.0);
}

#[test]
fn mutual_information_of_a_copy_is_its_entropy() {
    let t = paired_cat_table(&[(0, 0), (1, 1), (0, 0), (1, 1)]);
    let d = discretize(&t, 2).unwrap();
    let mi = mutual_information(&d, 0, &[1]).unwrap();
    assert!((mi - 2.0f64.ln()).abs() < 1e-12, "{mi}");
}

#[test]
fn mutual_information_matches_direct_summation() {
    // joint counts {(0,0):2, (0,1):1, (1,0):1, (1,1):4}
    let mut pairs = Vec::new();
    pairs.extend(std::iter::repeat_n((0, 0), 2));
    pairs.push((0, 1));
    pairs.push((1, 0));
    pairs.extend(std::iter::repeat_n((1, 1), 4));
    let t = paired_cat_table(&pairs);
    let d = discretize(&t, 2).unwrap();

    // independent oracle: evaluate the defining sum over the literal counts
    let joint = [[2.0f64, 1.0], [1.0, 4.0]];
    let n = 8.0;
    let mut expected = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let p_xy = joint[x][y] / n;
            let p_x = (joint[x][0] + joint[x][1]) / n;
            let p_y = (joint[0][y] + joint[1][y]) / n;
            expected += p_xy * (p_xy / (p_x * p_y)).ln();
        }
    }
    let mi = mutual_information(&d, 0, &[1]).unwrap();
    assert!((mi - expected).abs() < 1e-12, "{mi} vs {expected}");
    assert!((mi - 0.110119).abs() < 1e-5);
}

#[test]
fn baynet_prefers_the_copy_as_parent() {
    let t = paired_cat_table(&[(0, 0), (1, 1), (0, 0), (1, 1), (0, 0), (1, 1)]);
    let model = fit_baynet(&t, &GeneratorConfig::baynet(2)).unwrap();
    assert_eq!(model.order, vec![0, 1]);
    assert_eq!(model.parents[1], vec![0]);
}

#[test]
fn baynet_picks_informative_parent_over_noise() {
    let schema = Arc::new(
        Schema::new(vec![
            ColumnSpec::categorical("x", RoleSet::NONE, &["x0", "x1"]),
            ColumnSpec::categorical("z", RoleSet::NONE, &["z0", "z1"]),
            ColumnSpec::categorical("y", RoleSet::TARGET, &["y0", "y1"]),
        ])
        .unwrap(),
    );
    // y copies x; z is an unrelated alternating pattern
    let rows = (0..32)
        .map(|i| {
            let x = (i / 2) % 2;
            vec![Cell::Cat(x), Cell::Cat(i % 2), Cell::Cat(x)]
        })
        .collect();
    let t = Table::new(schema, rows).unwrap();
    let model = fit_baynet(&t, &GeneratorConfig::baynet(2)).unwrap();
    let y_pos = model.order.iter().position(|&c| c == 2).unwrap();
    assert!(model.parents[y_pos].contains(&0));
    assert!(!model.parents[y_pos].contains(&1));
}

#[test]
fn single_column_table_fits_a_marginal_only() {
    let schema = Arc::new(
        Schema::new(vec![ColumnSpec::categorical(
            "y",
            RoleSet::TARGET,
            &["a", "b"],
        )])
        .unwrap(),
    );
    let rows = (0..6).map(|i| vec![Cell::Cat(i % 2)]).collect();
    let t = Table::new(schema, rows).unwrap();
    let model = fit_baynet(&t, &GeneratorConfig::baynet(2)).unwrap();
    assert_eq!(model.order, vec![0]);
    assert_eq!(model.parents, vec![Vec::<usize>::new()]);
    assert_eq!(model.tables[0].dist.len(), 1);
}

#[test]
fn max_parents_bounds_every_parent_set() {
    let schema = Arc::new(
        Schema::new(vec![
            ColumnSpec::numeric("a", RoleSet::NONE),
            ColumnSpec::numeric("b", RoleSet::NONE),
            ColumnSpec::categorical("y", RoleSet::TARGET, &["t0", "t1"]),
        ])
        .unwrap(),
    );
    let rows = (0..40)
        .map(|i| {
            vec![
                Cell::Num(i as f64),
                Cell::Num((i * 7 % 13) as f64),
                Cell::Cat(i % 2),
            ]
        })
        .collect();
    let t = Table::new(schema, rows).unwrap();
    let mut cfg = GeneratorConfig::baynet(4);
    cfg.max_parents = 1;
    let model = fit_baynet(&t, &cfg).unwrap();
    assert!(model.parents.iter().all(|p| p.len() <= 1));
}

#[test]
fn privbayes_budget_accounting_is_exact() {
    let t = paired_cat_table(&[(0, 0), (1, 1), (0, 1), (1, 0), (0, 0), (1, 1)]);
    for epsilon in [0.1, 1.0, 10.0, 15.0] {
        let fit = fit_privbayes(&t, &GeneratorConfig::privbayes(2, epsilon)).unwrap();
        let acc = fit.account;
        assert_eq!(
            acc.epsilon_structure + acc.epsilon_parameters,
            acc.epsilon_total
        );
        assert_eq!(acc.epsilon_total, epsilon);
    }
}

#[test]
fn privbayes_converges_to_baynet_at_huge_epsilon() {
    let schema = Arc::new(
        Schema::new(vec![
            ColumnSpec::categorical("a", RoleSet::NONE, &["a0", "a1", "a2"]),
            ColumnSpec::categorical("b", RoleSet::NONE, &["b0", "b1"]),
            ColumnSpec::categorical("y", RoleSet::TARGET, &["y0", "y1"]),
        ])
        .unwrap(),
    );
    // chain with distinct strengths: b follows a, y follows b with slack
    let rows = (0..60)
        .map(|i| {
            let a = i % 3;
            let b = if a == 2 { 1 } else { a % 2 };
            let y = if i % 5 == 0 { 1 - b } else { b };
            vec![Cell::Cat(a), Cell::Cat(b), Cell::Cat(y)]
        })
        .collect();
    let t = Table::new(schema, rows).unwrap();

    let reference = fit_baynet(&t, &GeneratorConfig::baynet(2)).unwrap();
    let fit = fit_privbayes(&t, &GeneratorConfig::privbayes(2, 1e9).with_seed(5)).unwrap();
    assert_eq!(fit.model.order, reference.order);
    assert_eq!(fit.model.parents, reference.parents);
    for (noisy, clean) in fit.model.tables.iter().zip(&reference.tables) {
        for (nd, cd) in noisy.dist.iter().zip(&clean.dist) {
            for (a, b) in nd.iter().zip(cd) {
                assert!((a - b).abs() < 1e-4, "{a} vs {b}");
            }
        }
    }
    assert!(!fit.budget_exhausted);
}

#[test]
fn privbayes_flags_drowned_counts() {
    // single column, 4 rows, epsilon 1e-6: the noise scale dwarfs every
    // count, so across seeds some fit clamps every cell to zero and the
    // uniform-table flag must fire (each seed is deterministic)
    let schema = Arc::new(
        Schema::new(vec![ColumnSpec::categorical(
            "y",
            RoleSet::TARGET,
            &["a", "b"],
        )])
        .unwrap(),
    );
    let rows = (0..4).map(|i| vec![Cell::Cat(i % 2)]).collect();
    let t = Table::new(schema, rows).unwrap();
    let fired = (0..100).filter(|&s| {
        fit_privbayes(&t, &GeneratorConfig::privbayes(2, 1e-6).with_seed(s))
            .unwrap()
            .budget_exhausted
    });
    assert!(fired.count() > 10);

    // a healthy budget never fires on well-populated counts
    let pairs: Vec<(usize, usize)> = (0..50).map(|i| (i % 2, (i / 2) % 2)).collect();
    let t = paired_cat_table(&pairs);
    let fit = fit_privbayes(&t, &GeneratorConfig::privbayes(2, 10.0).with_seed(1)).unwrap();
    assert!(!fit.budget_exhausted);
}

#[test]
fn sampling_a_constant_table_is_a_point_mass() {
    let t = num_table(&[4.5; 10]);
    let model = fit_baynet(&t, &GeneratorConfig::baynet(3)).unwrap();
    let s = sample_synthetic(&model, 50, 9);
    assert_eq!(s.len(), 50);
    assert!(s.numeric_column(0).iter().all(|&v| v == 4.5));
}

#[test]
fn sampling_zero_rows_keeps_schema() {
    let t = num_table(&[1.0, 2.0, 3.0]);
    let model = fit_baynet(&t, &GeneratorConfig::baynet(2)).unwrap();
    let s = sample_synthetic(&model, 0, 1);
    assert!(s.is_empty());
    assert_eq!(s.schema(), t.schema());
}

#[test]
fn baynet_reproduces_strong_correlation() {
    let pairs: Vec<(usize, usize)> = (0..100).map(|i| (i % 2, i % 2)).collect();
    let t = paired_cat_table(&pairs);
    let model = fit_baynet(&t, &GeneratorConfig::baynet(2)).unwrap();
    let s = sample_synthetic(&model, 10_000, 21);
    let agree = s
        .rows()
        .iter()
        .filter(|r| r[0].as_cat() == r[1].as_cat())
        .count();
    // add-one smoothing admits slack below perfect agreement
    assert!(agree as f64 / 10_000.0 >= 0.95, "agreement {agree}");
}

#[test]
fn indhist_keeps_single_valued_columns_fixed() {
    let t = num_table(&[7.0; 20]);
    let model = fit_indhist(&t, &GeneratorConfig::ind_hist(4)).unwrap();
    let s = sample_synthetic(&model, 200, 3);
    assert!(s.numeric_column(0).iter().all(|&v| v == 7.0));
}

#[test]
fn indhist_breaks_dependence() {
    let pairs: Vec<(usize, usize)> = (0..100).map(|i| (i % 2, i % 2)).collect();
    let t = paired_cat_table(&pairs);
    let model = fit_indhist(&t, &GeneratorConfig::ind_hist(2)).unwrap();
    let s = sample_synthetic(&model, 10_000, 8);
    let d = discretize(&s, 2).unwrap();
    let mi = mutual_information(&d, 0, &[1]).unwrap();
    assert!(mi <= 0.05, "output MI {mi}");
}

#[test]
fn indhist_preserves_marginals() {
    // skewed marginal: 70/30
    let pairs: Vec<(usize, usize)> = (0..100)
        .map(|i| (usize::from(i % 10 >= 7), i % 2))
        .collect();
    let t = paired_cat_table(&pairs);
    let model = fit_indhist(&t, &GeneratorConfig::ind_hist(2)).unwrap();
    let s = sample_synthetic(&model, 10_000, 17);
    for col in 0..2 {
        let real = t.category_counts(col);
        let synth = s.category_counts(col);
        let tvd: f64 = real
            .iter()
            .zip(&synth)
            .map(|(&r, &s)| (r as f64 / 100.0 - s as f64 / 10_000.0).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tvd <= 0.05, "column {col} marginal TVD {tvd}");
    }
}

#[test]
fn model_json_roundtrips() {
    let t = paired_cat_table(&[(0, 0), (1, 1), (0, 1), (1, 0)]);
    let model = fit_baynet(&t, &GeneratorConfig::baynet(2)).unwrap();
    let text = model.to_json();
    let back = BayesNetModel::from_json(&text).unwrap();
    assert_eq!(model, back);
}

#[test]
fn config_validation_rejects_bad_parameters() {
    assert!(GeneratorConfig::baynet(1).validate().is_err());
    assert!(GeneratorConfig::privbayes(5, 0.0).validate().is_err());
    let mut cfg = GeneratorConfig::baynet(5);
    cfg.max_parents = 0;
    assert!(cfg.validate().is_err());
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    fn arb_mixed_table() -> impl Strategy<Value = Table> {
        let schema = Arc::new(
            Schema::new(vec![
                ColumnSpec::numeric("v", RoleSet::NONE),
                ColumnSpec::categorical("c", RoleSet::NONE, &["c0", "c1", "c2"]),
                ColumnSpec::categorical("y", RoleSet::TARGET, &["t0", "t1"]),
            ])
            .unwrap(),
        );
        (2usize..40)
            .prop_flat_map(|n| {
                (
                    proptest::collection::vec(-50f64..50.0, n),
                    proptest::collection::vec(0usize..3, n),
                    proptest::collection::vec(0usize..2, n),
                )
            })
            .prop_map(move |(v, c, y)| {
                let rows = (0..v.len())
                    .map(|i| vec![Cell::Num(v[i]), Cell::Cat(c[i]), Cell::Cat(y[i])])
                    .collect();
                Table::new(Arc::clone(&schema), rows).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn generators_are_deterministic(t in arb_mixed_table(), seed in any::<u64>()) {
            for cfg in [
                GeneratorConfig::ind_hist(3).with_seed(seed),
                GeneratorConfig::baynet(3).with_seed(seed),
                GeneratorConfig::privbayes(3, 1.0).with_seed(seed),
            ] {
                let a = fit(&t, &cfg).unwrap();
                let b = fit(&t, &cfg).unwrap();
                prop_assert_eq!(a.to_json(), b.to_json());
                let sa = sample_synthetic(&a, 20, seed);
                let sb = sample_synthetic(&b, 20, seed);
                prop_assert_eq!(sa, sb);
            }
        }

        #[test]
        fn conditional_tables_are_normalized(t in arb_mixed_table(), seed in any::<u64>()) {
            for cfg in [
                GeneratorConfig::baynet(4).with_seed(seed),
                GeneratorConfig::privbayes(4, 0.5).with_seed(seed),
            ] {
                let model = fit(&t, &cfg).unwrap();
                for table in &model.tables {
                    for row in &table.dist {
                        prop_assert!(row.iter().all(|&p| p >= 0.0));
                        prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                    }
                }
            }
        }

        #[test]
        fn samples_stay_inside_learned_ranges(t in arb_mixed_table(), seed in any::<u64>()) {
            let model = fit(&t, &GeneratorConfig::baynet(3).with_seed(seed)).unwrap();
            let s = sample_synthetic(&model, 64, seed);
            let lo = model.edges[0][0];
            let hi = *model.edges[0].last().unwrap();
            prop_assert!(s.numeric_column(0).iter().all(|&v| v >= lo && v <= hi));
            let n_cats = s.schema().columns()[1].categories.len();
            prop_assert!(s.rows().iter().all(|r| r[1].as_cat() < n_cats));
        }
    }
}
