//! Family-to-family transfer grid and the statistics derived from it.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::AnalyticsError;
use crate::registry::Family;

/// Negative-transfer counts quoted alongside the reference grid. A strict
/// rescan of the rounded published cells gives 22 and 40; both are reported.
pub const REPORTED_NEGATIVE_TRANSFER: NegativeTransferCounts = NegativeTransferCounts {
    data_budget: 21,
    compute_budget: 38,
};

/// Which intra-family baseline a co-trained cell is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// Intra-family model trained for the same number of examples per family.
    Data,
    /// Intra-family model trained for the same number of steps.
    Compute,
}

/// F×F co-training grid. Cell `(i, j)` is the score on target family `j` of a
/// model co-trained on families `i` and `j`; the diagonal is replaced by two
/// intra-family baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    families: Vec<Family>,
    // Row-major F×F; diagonal slots are unused and hold 0.
    cells: Vec<f64>,
    diag_data: Vec<f64>,
    diag_compute: Vec<f64>,
}

impl TransferMatrix {
    /// `rows[i][j]` for `i != j` are the off-diagonal scores; `rows[i][i]` is ignored.
    pub fn new(
        families: Vec<Family>,
        rows: Vec<Vec<f64>>,
        diag_data: Vec<f64>,
        diag_compute: Vec<f64>,
    ) -> Result<Self, AnalyticsError> {
        let f = families.len();
        for (i, fam) in families.iter().enumerate() {
            if families[..i].contains(fam) {
                return Err(AnalyticsError::Invalid(format!("family {fam} listed twice")));
            }
        }
        if rows.len() != f || rows.iter().any(|r| r.len() != f) || diag_data.len() != f || diag_compute.len() != f {
            return Err(AnalyticsError::Invalid(format!("grid is not {f}x{f}")));
        }
        let mut cells = vec![0.0; f * f];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if i == j {
                    continue;
                }
                if !v.is_finite() {
                    return Err(AnalyticsError::Invalid(format!("cell ({i},{j}) is not finite")));
                }
                cells[i * f + j] = v;
            }
        }
        if diag_data.iter().chain(&diag_compute).any(|v| !v.is_finite()) {
            return Err(AnalyticsError::Invalid("diagonal value is not finite".into()));
        }
        Ok(Self {
            families,
            cells,
            diag_data,
            diag_compute,
        })
    }

    pub fn families(&self) -> &[Family] {
        &self.families
    }

    pub fn size(&self) -> usize {
        self.families.len()
    }

    /// Off-diagonal score; `None` on the diagonal.
    pub fn get(&self, source: usize, target: usize) -> Option<f64> {
        (source != target).then(|| self.cells[source * self.size() + target])
    }

    pub fn diagonal(&self, budget: Budget) -> &[f64] {
        match budget {
            Budget::Data => &self.diag_data,
            Budget::Compute => &self.diag_compute,
        }
    }

    /// Parses the TSV layout: a header `<label> FAM1 .. FAMF`, then one row per
    /// family (in header order) whose diagonal cell is `data/compute`. A
    /// trailing `AVG` row is ignored.
    pub fn from_tsv(text: &str) -> Result<Self, AnalyticsError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let parse = |line: usize, message: String| AnalyticsError::Parse { line, message };

        let (hline, header) = lines.next().ok_or_else(|| parse(1, "missing header row".into()))?;
        let families = header
            .split('\t')
            .skip(1)
            .map(|s| s.parse::<Family>().map_err(|e| parse(hline, e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let f = families.len();
        if f < 2 {
            return Err(parse(hline, "need at least two families".into()));
        }

        let mut rows = Vec::with_capacity(f);
        let mut diag_data = Vec::with_capacity(f);
        let mut diag_compute = Vec::with_capacity(f);
        for (lineno, line) in lines {
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols[0].to_ascii_uppercase().starts_with("AVG") {
                continue;
            }
            let i = rows.len();
            if i == f {
                return Err(parse(lineno, "more rows than families".into()));
            }
            if cols.len() != f + 1 {
                return Err(parse(
                    lineno,
                    format!("expected {} columns, found {}", f + 1, cols.len()),
                ));
            }
            let label: Family = cols[0]
                .parse()
                .map_err(|e: crate::registry::RegistryError| parse(lineno, e.to_string()))?;
            if label != families[i] {
                return Err(parse(
                    lineno,
                    format!("row {label} out of order; expected {}", families[i]),
                ));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse(lineno, format!("bad score {s:?}")))
            };
            let mut row = vec![f64::NAN; f];
            for (j, cell) in cols[1..].iter().enumerate() {
                if i == j {
                    let (d, c) = cell
                        .split_once('/')
                        .ok_or_else(|| parse(lineno, format!("diagonal cell {cell:?} must be data/compute")))?;
                    diag_data.push(num(d.trim())?);
                    diag_compute.push(num(c.trim())?);
                } else {
                    row[j] = num(cell)?;
                }
            }
            rows.push(row);
        }
        if rows.len() != f {
            return Err(parse(0, format!("expected {f} rows, found {}", rows.len())));
        }
        Self::new(families, rows, diag_data, diag_compute)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AnalyticsError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| AnalyticsError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_tsv(&text)
    }

    pub fn to_tsv(&self) -> String {
        let f = self.size();
        let mut out = String::from("family");
        for fam in &self.families {
            let _ = write!(out, "\t{fam}");
        }
        out.push('\n');
        for i in 0..f {
            out.push_str(self.families[i].tag());
            for j in 0..f {
                match self.get(i, j) {
                    Some(v) => {
                        let _ = write!(out, "\t{v}");
                    }
                    None => {
                        let _ = write!(out, "\t{}/{}", self.diag_data[i], self.diag_compute[i]);
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Column means over the off-diagonal cells:
/// `colavg(j) = 1/(F-1) * Σ_{i≠j} m[i][j]`.
pub fn col_avg_excl_diag(m: &TransferMatrix) -> Result<Vec<f64>, AnalyticsError> {
    let f = m.size();
    if f < 2 {
        return Err(AnalyticsError::Invalid("need at least two families".into()));
    }
    Ok((0..f)
        .map(|j| (0..f).filter_map(|i| m.get(i, j)).sum::<f64>() / (f - 1) as f64)
        .collect())
}

/// Average relative gain (percent) a source family gives the other families,
/// measured against each target column's off-diagonal mean:
/// `Δ(i) = 100/(F-1) * Σ_{j≠i} (m[i][j] - colavg(j)) / colavg(j)`.
pub fn delta_avg(m: &TransferMatrix) -> Result<Vec<f64>, AnalyticsError> {
    let avgs = col_avg_excl_diag(m)?;
    if let Some(j) = avgs.iter().position(|&a| a <= 0.0) {
        return Err(AnalyticsError::NonPositiveColumnAverage(m.families()[j]));
    }
    let f = m.size();
    Ok((0..f)
        .map(|i| {
            let rel: f64 = (0..f)
                .filter_map(|j| m.get(i, j).map(|v| (v - avgs[j]) / avgs[j]))
                .sum();
            100.0 * rel / (f - 1) as f64
        })
        .collect())
}

/// Off-diagonal cells scoring strictly below the target column's intra-family
/// baseline for `budget`. Ties count as not worse.
pub fn count_negative_transfer(m: &TransferMatrix, budget: Budget) -> usize {
    let diag = m.diagonal(budget);
    let f = m.size();
    (0..f)
        .flat_map(|i| (0..f).map(move |j| (i, j)))
        .filter(|&(i, j)| m.get(i, j).is_some_and(|v| v < diag[j]))
        .count()
}

/// Families sorted by descending Δ; equal values keep family declaration order.
pub fn rank_families(families: &[Family], delta: &[f64]) -> Vec<Family> {
    let mut order: Vec<(Family, f64)> = families.iter().copied().zip(delta.iter().copied()).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    order.into_iter().map(|(f, _)| f).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NegativeTransferCounts {
    pub data_budget: usize,
    pub compute_budget: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticsReport {
    pub families: Vec<Family>,
    pub col_avgs: Vec<f64>,
    pub delta_avg: Vec<f64>,
    pub neg_counts: NegativeTransferCounts,
    pub ranking: Vec<Family>,
    /// Counts quoted for this grid elsewhere, when they differ from the rescan.
    pub reported_neg_counts: Option<NegativeTransferCounts>,
}

/// Full statistics for `m`. The bundled reference grid also carries the
/// negative-transfer counts quoted alongside it.
pub fn analyze_transfer(m: &TransferMatrix) -> Result<AnalyticsReport, AnalyticsError> {
    let col_avgs = col_avg_excl_diag(m)?;
    let delta = delta_avg(m)?;
    Ok(AnalyticsReport {
        families: m.families().to_vec(),
        ranking: rank_families(m.families(), &delta),
        col_avgs,
        delta_avg: delta,
        neg_counts: NegativeTransferCounts {
            data_budget: count_negative_transfer(m, Budget::Data),
            compute_budget: count_negative_transfer(m, Budget::Compute),
        },
        reported_neg_counts: (*m == crate::bundled::reference_transfer_matrix()).then_some(REPORTED_NEGATIVE_TRANSFER),
    })
}

impl AnalyticsReport {
    /// Top `k` families of the ranking.
    pub fn top(&self, k: usize) -> &[Family] {
        &self.ranking[..k.min(self.ranking.len())]
    }

    /// TSV with columns `family col_avg delta_avg_pct`, followed by `#` lines
    /// for the negative-transfer counts and the ranking.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("family\tcol_avg\tdelta_avg_pct\n");
        for ((fam, avg), delta) in self.families.iter().zip(&self.col_avgs).zip(&self.delta_avg) {
            let _ = writeln!(out, "{fam}\t{avg:.4}\t{delta:+.2}");
        }
        let _ = writeln!(
            out,
            "# negative_transfer\tdata_budget={}\tcompute_budget={}\tof={}",
            self.neg_counts.data_budget,
            self.neg_counts.compute_budget,
            self.families.len() * self.families.len().saturating_sub(1)
        );
        if let Some(r) = self.reported_neg_counts {
            let _ = writeln!(
                out,
                "# reported_negative_transfer\tdata_budget={}\tcompute_budget={}",
                r.data_budget, r.compute_budget
            );
        }
        let ranking: Vec<&str> = self.ranking.iter().map(|f| f.tag()).collect();
        let _ = writeln!(out, "# ranking\t{}", ranking.join("\t"));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two(a: f64, b: f64) -> TransferMatrix {
        TransferMatrix::new(
            vec![Family::Sum, Family::Nli],
            vec![vec![0.0, a], vec![b, 0.0]],
            vec![1.0, 1.0],
            vec![2.0, 2.0],
        )
        .unwrap()
    }

    #[test]
    fn two_by_two_col_avgs() {
        // m[SUM→NLI] = a sits in column NLI, m[NLI→SUM] = b in column SUM.
        let m = two_by_two(3.0, 5.0);
        assert_eq!(col_avg_excl_diag(&m).unwrap(), vec![5.0, 3.0]);
    }

    #[test]
    fn fixed_point_rows_give_zero_delta() {
        // Every off-diagonal cell of column j equals colavg(j).
        let fams = vec![Family::Sum, Family::Dlg, Family::Nli];
        let cols = [10.0, 20.0, 40.0];
        let rows = (0..3).map(|_| cols.to_vec()).collect();
        let m = TransferMatrix::new(fams, rows, vec![0.0; 3], vec![0.0; 3]).unwrap();
        for d in delta_avg(&m).unwrap() {
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn zero_column_average_is_an_error() {
        let m = two_by_two(0.0, 5.0);
        assert!(matches!(
            delta_avg(&m),
            Err(AnalyticsError::NonPositiveColumnAverage(Family::Nli))
        ));
    }

    #[test]
    fn negative_transfer_strict_and_monotone() {
        let fams = vec![Family::Sum, Family::Dlg, Family::Nli];
        let rows = vec![vec![0.0, 5.0, 5.0], vec![5.0, 0.0, 5.0], vec![5.0, 5.0, 0.0]];
        let m = TransferMatrix::new(fams.clone(), rows.clone(), vec![5.0; 3], vec![6.0; 3]).unwrap();
        assert_eq!(count_negative_transfer(&m, Budget::Data), 0);
        assert_eq!(count_negative_transfer(&m, Budget::Compute), 6);
        let m = TransferMatrix::new(fams, rows, vec![1.0; 3], vec![1.0; 3]).unwrap();
        assert_eq!(count_negative_transfer(&m, Budget::Data), 0);
    }

    #[test]
    fn ranking_ties_follow_family_order() {
        let fams = [Family::Rc, Family::Sum, Family::Nli];
        assert_eq!(
            rank_families(&fams, &[1.0, 1.0, 2.0]),
            vec![Family::Nli, Family::Sum, Family::Rc]
        );
    }

    #[test]
    fn tsv_round_trip_and_errors() {
        let m = two_by_two(3.5, 5.25);
        assert_eq!(TransferMatrix::from_tsv(&m.to_tsv()).unwrap(), m);
        let with_avg = format!("{}AVG\t1\t2\n", m.to_tsv());
        assert_eq!(TransferMatrix::from_tsv(&with_avg).unwrap(), m);

        let bad_diag = "family\tSUM\tNLI\nSUM\t1\t2\nNLI\t3\t4/5\n";
        assert!(matches!(
            TransferMatrix::from_tsv(bad_diag),
            Err(AnalyticsError::Parse { line: 2, .. })
        ));
        let bad_order = "family\tSUM\tNLI\nNLI\t1/2\t2\nSUM\t3\t4/5\n";
        assert!(matches!(
            TransferMatrix::from_tsv(bad_order),
            Err(AnalyticsError::Parse { line: 2, .. })
        ));
        let bad_num = "family\tSUM\tNLI\nSUM\t1/1\tx\nNLI\t3\t4/5\n";
        assert!(matches!(
            TransferMatrix::from_tsv(bad_num),
            Err(AnalyticsError::Parse { line: 2, .. })
        ));
        assert!(TransferMatrix::from_tsv("family\tSUM\tNLI\nSUM\t1/1\t2\n").is_err());
    }

    #[test]
    fn report_tsv_layout() {
        let r = analyze_transfer(&two_by_two(3.0, 5.0)).unwrap();
        let tsv = r.to_tsv();
        assert!(tsv.starts_with("family\tcol_avg\tdelta_avg_pct\nSUM\t5.0000\t+0.00\nNLI\t3.0000\t+0.00\n"));
        assert!(tsv.contains("# negative_transfer\tdata_budget=0\tcompute_budget=0\tof=2\n"));
    }
}
