//! Brute-force reference evaluator. Shares no code with the crate beyond
//! reading positions and operator strings.
#![allow(dead_code)]

pub type Cx = (f64, f64);

fn add(a: Cx, b: Cx) -> Cx {
    (a.0 + b.0, a.1 + b.1)
}

fn sub(a: Cx, b: Cx) -> Cx {
    (a.0 - b.0, a.1 - b.1)
}

fn div(a: Cx, b: Cx) -> Cx {
    if b.0 == 0.0 && b.1 == 0.0 {
        return (0.0, 0.0);
    }
    let n = b.0 * b.0 + b.1 * b.1;
    ((a.0 * b.0 + a.1 * b.1) / n, (a.1 * b.0 - a.0 * b.1) / n)
}

pub struct OracleOp {
    pub conv: usize,
    /// Steps in application order, `'D'` or `'Q'`.
    pub steps: Vec<char>,
    pub proj: String,
}

pub fn parse_op(text: &str) -> OracleOp {
    let parts: Vec<&str> = text.split('|').collect();
    assert_eq!(parts.len(), 3, "{text}");
    let conv = parts[0].trim_start_matches('C').parse().unwrap();
    let steps = if parts[1] == "I" {
        Vec::new()
    } else {
        parts[1].chars().rev().collect()
    };
    OracleOp {
        conv,
        steps,
        proj: parts[2].to_string(),
    }
}

fn project(z: Cx, proj: &str) -> f64 {
    match proj {
        "re" => z.0,
        "im" => z.1,
        "mod" => z.0.hypot(z.1),
        "arg" => {
            if z.0 == 0.0 && z.1 == 0.0 {
                0.0
            } else {
                let a = z.1.atan2(z.0);
                if a == -std::f64::consts::PI {
                    std::f64::consts::PI
                } else {
                    a
                }
            }
        }
        other => panic!("unknown projection {other}"),
    }
}

/// Every window of exactly the operator's minimal length, evaluated on its own.
pub fn features(op: &OracleOp, pts: &[Cx]) -> Vec<f64> {
    let need = op.conv + op.steps.len();
    if pts.len() < need {
        return Vec::new();
    }
    (0..=pts.len() - need)
        .map(|start| eval_window(op, &pts[start..start + need]))
        .collect()
}

fn eval_window(op: &OracleOp, w: &[Cx]) -> f64 {
    let mut seq: Vec<Cx> = Vec::new();
    for i in 0..=w.len() - op.conv {
        let mut s = (0.0, 0.0);
        for z in &w[i..i + op.conv] {
            s = add(s, *z);
        }
        seq.push(s);
    }
    for &step in &op.steps {
        let mut next = Vec::new();
        for i in 1..seq.len() {
            next.push(if step == 'D' {
                sub(seq[i], seq[i - 1])
            } else {
                div(seq[i], seq[i - 1])
            });
        }
        seq = next;
    }
    assert_eq!(seq.len(), 1);
    project(seq[0], &op.proj)
}

pub fn cut_points(values: &[f64], k: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let mut cuts: Vec<f64> = Vec::new();
    for j in 1..k {
        let idx = (j * n).div_ceil(k);
        let b = sorted[idx];
        if b > sorted[0] && cuts.last() != Some(&b) {
            cuts.push(b);
        }
    }
    cuts
}

fn bin_of(cuts: &[f64], x: f64) -> usize {
    cuts.iter().filter(|&&c| c <= x).count()
}

fn shares(values: &[f64], cuts: &[f64]) -> Vec<f64> {
    let mut counts = vec![0usize; cuts.len() + 1];
    for &v in values {
        counts[bin_of(cuts, v)] += 1;
    }
    counts
        .into_iter()
        .map(|c| {
            if values.is_empty() {
                0.0
            } else {
                c as f64 / values.len() as f64
            }
        })
        .collect()
}

pub struct OracleConfig {
    pub k: usize,
    pub eps: f64,
    pub log_ratio: bool,
}

/// Value of the last point of `prolonged` given `special`, from scratch.
pub fn prolongation_value(
    cfg: &OracleConfig,
    ops: &[String],
    general: &[Cx],
    special: &[Cx],
    prolonged: &[Cx],
) -> Option<f64> {
    let mut total = 0.0;
    let mut used = 0;
    for text in ops {
        let op = parse_op(text);
        let need = op.conv + op.steps.len();
        if need > special.len() || need > prolonged.len() {
            continue;
        }
        let g = features(&op, general);
        let cuts = cut_points(&g, cfg.k);
        let pg = shares(&g, &cuts);
        let ps = shares(&features(&op, special), &cuts);
        let x = eval_window(&op, &prolonged[prolonged.len() - need..]);
        let b = bin_of(&cuts, x);
        total += if cfg.log_ratio {
            (ps[b].max(cfg.eps) / pg[b].max(cfg.eps)).ln()
        } else if ps[b] > 0.0 {
            1.0
        } else {
            0.0
        };
        used += 1;
    }
    (used > 0).then(|| total / used as f64)
}
