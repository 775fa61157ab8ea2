//! Serialization: frozen number formatting, CSV readers/writers for samples,
//! curves, decompositions, probing reports and verdicts, and a
//! self-contained SVG line plot for curve figures.

use crate::curves::LossCurve;
use crate::error::{Error, Result};
use crate::metrics::{BrierDecomposition, Prediction};
use crate::model::{InformationScope, PopulationSample};
use crate::probing::{ClassifierFamily, ProbingReport};
use crate::sufficiency::DominanceVerdict;
use std::fmt::Write as _;
use std::path::Path;

/// Frozen numeric format: 17 significant digits, `.` decimal separator, no
/// grouping. Scientific notation keeps the digit count stable across
/// magnitudes and the output byte-identical across runs.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize, what: &str) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse {what} from `{}`", field.trim()),
    })
}

/// Column order of the per-scope posterior columns in the sample CSV.
pub const SAMPLE_HEADER: &str = "x1,x2,label,psi_full,psi_c1,psi_c2,psi_nb,psi_nbcal,psi_prior";

pub fn sample_csv(sample: &PopulationSample) -> String {
    let mut out = String::with_capacity(sample.len() * 160);
    out.push_str(SAMPLE_HEADER);
    out.push('\n');
    for i in 0..sample.len() {
        let [x1, x2] = sample.features[i];
        write!(out, "{},{},{}", fmt_g17(x1), fmt_g17(x2), sample.labels[i]).unwrap();
        for scope in InformationScope::ALL {
            write!(out, ",{}", fmt_g17(sample.psis(scope)[i])).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn curve_csv(curve: &LossCurve) -> String {
    let mut out = String::with_capacity(curve.grid.len() * 48 + 16);
    out.push_str("t,value\n");
    for (&t, &v) in curve.grid.iter().zip(&curve.values) {
        out.push_str(&fmt_g17(t));
        out.push(',');
        out.push_str(&fmt_g17(v));
        out.push('\n');
    }
    out
}

pub fn decomposition_csv(d: &BrierDecomposition) -> String {
    format!(
        "refinement,grouping,groupwise_calibration,total\n{},{},{},{}\n",
        fmt_g17(d.refinement),
        fmt_g17(d.grouping),
        fmt_g17(d.groupwise_calibration),
        fmt_g17(d.total)
    )
}

pub fn probing_csv(r: &ProbingReport) -> String {
    format!(
        "lhs,combined_regret,rhs\n{},{},{}\n",
        fmt_g17(r.calibration_loss_lhs),
        fmt_g17(r.combined_regret),
        fmt_g17(r.regret_integral_rhs)
    )
}

pub fn verdict_csv(v: &DominanceVerdict) -> String {
    format!(
        "relation,max_gap,argmax_t\n{},{},{}\n",
        v.relation.label(),
        fmt_g17(v.max_gap),
        fmt_g17(v.argmax_t)
    )
}

/// Parse a predictions CSV with header `z,label[,psi,group_score]`.
pub fn read_predictions_csv(text: &str) -> Result<Vec<Prediction>> {
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(Error::Parse {
            line: 1,
            msg: "empty file".into(),
        });
    };
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    let with_oracle = match cols.as_slice() {
        ["z", "label"] => false,
        ["z", "label", "psi", "group_score"] => true,
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header `z,label[,psi,group_score]`, got `{header}`"),
            })
        }
    };
    let mut preds = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} fields, got {}", cols.len(), fields.len()),
            });
        }
        let z: f64 = parse_field(fields[0], line, "z")?;
        let label: u8 = parse_field(fields[1], line, "label")?;
        if !(0.0..=1.0).contains(&z) || label > 1 {
            return Err(Error::Parse {
                line,
                msg: "z must lie in [0,1] and label in {0,1}".into(),
            });
        }
        let mut p = Prediction::new(z, label);
        if with_oracle {
            let psi: f64 = parse_field(fields[2], line, "psi")?;
            if !(0.0..=1.0).contains(&psi) {
                return Err(Error::Parse {
                    line,
                    msg: "psi must lie in [0,1]".into(),
                });
            }
            p.oracle_psi = Some(psi);
            p.group_score = Some(parse_field(fields[3], line, "group_score")?);
        }
        preds.push(p);
    }
    if preds.is_empty() {
        return Err(Error::Parse {
            line: 1,
            msg: "no data rows".into(),
        });
    }
    Ok(preds)
}

/// Parse a decision-family CSV with header `instance_id,t,decision`. Every
/// instance must supply decisions for the same ascending t grid.
pub fn read_family_csv(text: &str) -> Result<ClassifierFamily> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "instance_id,t,decision" => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: "expected header `instance_id,t,decision`".into(),
            })
        }
    }
    let mut grid: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<u8>> = Vec::new();
    let mut current: Option<usize> = None;
    let mut cursor = 0usize;
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let id: usize = parse_field(fields[0], line, "instance_id")?;
        let t: f64 = parse_field(fields[1], line, "t")?;
        let decision: u8 = parse_field(fields[2], line, "decision")?;
        if current != Some(id) {
            if id != rows.len() {
                return Err(Error::Parse {
                    line,
                    msg: format!("instance ids must be contiguous from 0, got {id}"),
                });
            }
            current = Some(id);
            cursor = 0;
            rows.push(Vec::new());
        }
        if rows.len() == 1 {
            grid.push(t);
        } else {
            if cursor >= grid.len() || grid[cursor] != t {
                return Err(Error::Parse {
                    line,
                    msg: format!("instance {id} deviates from the first instance's t grid"),
                });
            }
            cursor += 1;
        }
        rows.last_mut().unwrap().push(decision);
    }
    ClassifierFamily::new(grid, rows)
}

pub fn family_csv(family: &ClassifierFamily) -> String {
    let mut out = String::from("instance_id,t,decision\n");
    for (i, row) in family.decisions().iter().enumerate() {
        for (&t, &d) in family.grid().iter().zip(row) {
            writeln!(out, "{i},{},{d}", fmt_g17(t)).unwrap();
        }
    }
    out
}

const SVG_STYLES: [(&str, &str); 4] = [
    ("#1f3b70", "none"),
    ("#b03a2e", "9,4"),
    ("#1e7145", "10,4,2,4"),
    ("#7d6608", "2,4"),
];

/// Self-contained 800x600 SVG line plot: one polyline per labelled curve,
/// axes with a few ticks, and a legend. Line styles cycle
/// solid / dashed / dash-dotted / dotted.
pub fn curves_svg(curves: &[(&str, &LossCurve)]) -> String {
    let (w, h) = (800.0, 600.0);
    let (left, right, top, bottom) = (70.0, 20.0, 20.0, 50.0);
    let y_max = curves
        .iter()
        .flat_map(|(_, c)| c.values.iter().copied())
        .fold(0.0f64, f64::max)
        .max(1e-12)
        * 1.08;
    let px = |t: f64| left + t * (w - left - right);
    let py = |v: f64| h - bottom - (v / y_max) * (h - top - bottom);

    let mut out = String::new();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\" \
         font-family=\"sans-serif\" font-size=\"14\">"
    )
    .unwrap();
    writeln!(out, "<rect width=\"800\" height=\"600\" fill=\"white\"/>").unwrap();
    // axes
    writeln!(
        out,
        "<line x1=\"{left}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        h - bottom,
        w - right,
        h - bottom
    )
    .unwrap();
    writeln!(
        out,
        "<line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{}\" stroke=\"black\"/>",
        h - bottom
    )
    .unwrap();
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        writeln!(
            out,
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\
             <text x=\"{0}\" y=\"{3}\" text-anchor=\"middle\">{t}</text>",
            px(t),
            h - bottom,
            h - bottom + 6.0,
            h - bottom + 24.0
        )
        .unwrap();
        let v = y_max * t;
        writeln!(
            out,
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\
             <text x=\"{3}\" y=\"{4}\" text-anchor=\"end\">{v:.3}</text>",
            left - 6.0,
            py(v),
            left,
            left - 10.0,
            py(v) + 5.0
        )
        .unwrap();
    }
    writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">cost weight t</text>",
        (left + w - right) / 2.0,
        h - 8.0
    )
    .unwrap();

    for (k, (label, curve)) in curves.iter().enumerate() {
        let (color, dash) = SVG_STYLES[k % SVG_STYLES.len()];
        let mut points = String::new();
        for (&t, &v) in curve.grid.iter().zip(&curve.values) {
            write!(points, "{:.2},{:.2} ", px(t), py(v)).unwrap();
        }
        let dash_attr = if dash == "none" {
            String::new()
        } else {
            format!(" stroke-dasharray=\"{dash}\"")
        };
        writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"{dash_attr} \
             points=\"{}\"/>",
            points.trim_end()
        )
        .unwrap();
        // legend entry
        let ly = top + 18.0 + 22.0 * k as f64;
        writeln!(
            out,
            "<line x1=\"{0}\" y1=\"{ly}\" x2=\"{1}\" y2=\"{ly}\" stroke=\"{color}\" \
             stroke-width=\"1.8\"{dash_attr}/>\
             <text x=\"{2}\" y=\"{3}\">{label}</text>",
            w - right - 180.0,
            w - right - 140.0,
            w - right - 132.0,
            ly + 5.0
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}
