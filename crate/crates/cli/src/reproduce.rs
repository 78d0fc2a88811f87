use std::fmt::Write as _;
use std::path::Path;

use clap::ValueEnum;
use deltahazard::datasets::{earthquakes, xie_goh};
use deltahazard::*;
use serde_json::json;

use crate::{CliResult, Failure};

#[derive(Clone, Copy, ValueEnum)]
pub enum Target {
    Table3,
    Table4,
    Table5,
    Table7,
    Table8,
    Table9,
    Fig1,
    Fig3,
    Fig4,
    Fig5,
}

impl Target {
    fn name(self) -> &'static str {
        match self {
            Self::Table3 => "table3",
            Self::Table4 => "table4",
            Self::Table5 => "table5",
            Self::Table7 => "table7",
            Self::Table8 => "table8",
            Self::Table9 => "table9",
            Self::Fig1 => "fig1",
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
        }
    }
}

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
}

struct Figure {
    title: &'static str,
    xlabel: &'static str,
    ylabel: &'static str,
    series: Vec<Series>,
}

fn fmt3(x: f64) -> String {
    if x == 1.0 {
        "1".into()
    } else {
        format!("{x:.3}")
    }
}

pub fn run(target: Target, seed: u64, b: usize, out: &Path) -> CliResult<String> {
    std::fs::create_dir_all(out).map_err(|e| Failure::data(format!("{}: {e}", out.display())))?;
    let name = target.name();
    let write = |file: String, body: &str| {
        let path = out.join(file);
        std::fs::write(&path, body).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
    };
    let randomized = matches!(target, Target::Table5 | Target::Table7 | Target::Fig3);
    let seed_line = if randomized {
        format!("seed {seed}\n")
    } else {
        String::new()
    };

    if let Some(table) = table(target, seed, b)? {
        write(format!("{name}.txt"), &table)?;
        let meta = json!({ "target": name, "seed": randomized.then_some(seed), "B": matches!(target, Target::Table5 | Target::Table7).then_some(b) });
        write(
            format!("{name}.json"),
            &(serde_json::to_string_pretty(&meta).expect("json") + "\n"),
        )?;
        return Ok(seed_line + &table);
    }

    let fig = figure(target, seed)?;
    let mut dat = String::new();
    for (i, s) in fig.series.iter().enumerate() {
        if i > 0 {
            dat.push_str("\n\n");
        }
        writeln!(dat, "# {}", s.name).unwrap();
        for (x, y) in &s.points {
            writeln!(dat, "{x:.6} {y:.10}").unwrap();
        }
    }
    write(format!("{name}.dat"), &dat)?;
    let meta = json!({
        "target": name,
        "title": fig.title,
        "xlabel": fig.xlabel,
        "ylabel": fig.ylabel,
        "seed": randomized.then_some(seed),
        "data": format!("{name}.dat"),
        "series": fig.series.iter().enumerate().map(|(i, s)| json!({ "index": i, "name": s.name, "points": s.points.len() })).collect::<Vec<_>>(),
    });
    write(
        format!("{name}.json"),
        &(serde_json::to_string_pretty(&meta).expect("json") + "\n"),
    )?;
    Ok(format!(
        "{seed_line}wrote {}\n",
        out.join(format!("{name}.dat")).display()
    ))
}

fn delta_record_table(seq: &IntSequence, ks: std::ops::RangeInclusive<u32>) -> CliResult<String> {
    let mut s = String::from("k\tdelta-records\tTotal\n");
    for k in ks {
        let sample = extract_delta_records(seq, k)?;
        let values: Vec<String> = sample
            .flattened_original()
            .iter()
            .map(u64::to_string)
            .collect();
        writeln!(s, "{k}\t{}\t{}", values.join(","), sample.total()).unwrap();
    }
    Ok(s)
}

fn pvalue_table(
    seq: &IntSequence,
    ks: std::ops::RangeInclusive<u32>,
    kind: FamilyKind,
    seed: u64,
    b: usize,
) -> CliResult<String> {
    let mut s = String::from("k\tp-value\n");
    for k in ks {
        let sample = extract_delta_records(seq, k)?;
        let r = bootstrap_pvalue(
            &sample,
            Design::RawLength(seq.len() as u64),
            NullSpec::Composite(kind),
            b,
            seed,
        )?;
        writeln!(s, "{k}\t{:.3}", r.p_value).unwrap();
    }
    Ok(s)
}

fn table(target: Target, seed: u64, b: usize) -> CliResult<Option<String>> {
    Ok(Some(match target {
        Target::Table3 => delta_record_table(&xie_goh(), 1..=3)?,
        Target::Table8 => delta_record_table(&earthquakes(), 1..=4)?,
        Target::Table4 => {
            let seq = xie_goh();
            let mut s = String::from("k");
            for j in 1..=10 {
                write!(s, "\t{j}").unwrap();
            }
            s.push_str("\tN\n");
            for k in 1..=3 {
                let sample = extract_delta_records(&seq, k)?;
                let est = npmle_incomplete(&count_table(&sample));
                write!(s, "{k}").unwrap();
                for j in 0..10 {
                    write!(s, "\t{}", est.value(j).map_or("-".into(), fmt3)).unwrap();
                }
                writeln!(s, "\t{}", sample.total()).unwrap();
            }
            s
        }
        Target::Table5 => pvalue_table(&xie_goh(), 1..=3, FamilyKind::Geometric, seed, b)?,
        Target::Table7 => pvalue_table(&earthquakes(), 1..=4, FamilyKind::Poisson, seed, b)?,
        Target::Table9 => {
            let seq = earthquakes();
            let mut s = String::from("k");
            for j in 0..=10 {
                write!(s, "\t{j}").unwrap();
            }
            s.push('\n');
            for k in 1..=4 {
                let counts = count_table(&extract_delta_records(&seq, k)?);
                let est = npmle_isotonic(&counts, Direction::Increasing, Likelihood::Incomplete);
                write!(s, "{k}").unwrap();
                for j in 0..=10 {
                    write!(s, "\t{}", est.value(j).map_or("-".into(), fmt3)).unwrap();
                }
                s.push('\n');
            }
            let poisson = ParametricFamily::poisson(sample_mean(&seq))?;
            s.push_str("Poisson");
            for j in 0..=10 {
                write!(s, "\t{:.3}", poisson.hazard(j)).unwrap();
            }
            s.push('\n');
            s
        }
        _ => return Ok(None),
    }))
}

fn sample_mean(seq: &IntSequence) -> f64 {
    seq.values().iter().sum::<u64>() as f64 / seq.len() as f64
}

fn figure(target: Target, seed: u64) -> CliResult<Figure> {
    Ok(match target {
        Target::Fig1 => {
            let grid: Vec<f64> = (1..=99).map(|i| f64::from(i) / 100.0).collect();
            let mut series = vec![Series {
                name: "identity".into(),
                points: grid.iter().map(|&p| (p, p)).collect(),
            }];
            for k in 1..=4 {
                let mut points = Vec::with_capacity(grid.len());
                for &p in &grid {
                    let law = EstimatorLaw::with_gap(p, (1.0 - p).powi(k + 1))?;
                    points.push((p, law.moments()?.mean));
                }
                series.push(Series {
                    name: format!("k={k}"),
                    points,
                });
            }
            Figure {
                title: "Expectation of the estimator under geometric sampling",
                xlabel: "p",
                ylabel: "E(h)",
                series,
            }
        }
        Target::Fig3 => {
            let family = ParametricFamily::poisson(6.0)?;
            let k = 3;
            let mut rng = replicate_rng(seed, 0);
            let sample = simulate_one(
                &Sampler::new(family),
                k,
                StopRule::NRecords(5),
                &mut rng,
                sim::DEFAULT_ITERATION_CAP,
            )?;
            let counts = count_table(&sample);
            let est = npmle_isotonic(&counts, Direction::Increasing, Likelihood::Complete);
            let estimate: Vec<(f64, f64)> = est
                .entries
                .iter()
                .map(|e| (e.j as f64, e.value()))
                .collect();
            let truth = (0..=counts.max_value())
                .map(|j| (j as f64, family.hazard(j)))
                .collect();
            Figure {
                title: "Increasing estimator on a simulated Poisson(6) sample, n = 5, k = 3",
                xlabel: "j",
                ylabel: "h_j",
                series: vec![
                    Series {
                        name: "estimate".into(),
                        points: estimate,
                    },
                    Series {
                        name: "true hazard".into(),
                        points: truth,
                    },
                ],
            }
        }
        Target::Fig4 => {
            let seq = xie_goh();
            let mut series = Vec::new();
            for k in 1..=3 {
                let est = npmle_incomplete(&count_table(&extract_delta_records(&seq, k)?));
                let points = est
                    .entries
                    .iter()
                    .map(|e| ((e.j + seq.offset()) as f64, e.value()))
                    .collect();
                series.push(Series {
                    name: format!("k={k}"),
                    points,
                });
            }
            let p = 1.0 / sample_mean(&seq);
            series.push(Series {
                name: format!("full-sample MLE {p:.2}"),
                points: vec![(1.0, p), (10.0, p)],
            });
            Figure {
                title: "Hazard estimates for the defective-items data",
                xlabel: "j",
                ylabel: "h_j",
                series,
            }
        }
        Target::Fig5 => {
            let seq = earthquakes();
            let n = seq.len() as f64;
            let max = *seq.values().iter().max().expect("non-empty");
            let mut freq = vec![0u64; max as usize + 1];
            for &v in seq.values() {
                freq[v as usize] += 1;
            }
            let poisson = ParametricFamily::poisson(sample_mean(&seq))?;
            Figure {
                title: "Observed relative frequencies and fitted Poisson pmf",
                xlabel: "earthquakes per year",
                ylabel: "probability",
                series: vec![
                    Series {
                        name: "observed".into(),
                        points: freq
                            .iter()
                            .enumerate()
                            .map(|(j, &c)| (j as f64, c as f64 / n))
                            .collect(),
                    },
                    Series {
                        name: "Poisson".into(),
                        points: (0..=max).map(|j| (j as f64, poisson.pmf(j))).collect(),
                    },
                ],
            }
        }
        _ => unreachable!("tables are handled before figures"),
    })
}
