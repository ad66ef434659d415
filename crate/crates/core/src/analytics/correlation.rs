use std::collections::BTreeMap;

use serde::Serialize;

use super::AnalyticsError;

/// Symmetric dataset-by-dataset Pearson correlation matrix. Entries touching a
/// zero-variance dataset are `None` rather than a fabricated value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub datasets: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        self.values[a][b]
    }
}

/// Pearson correlation across models for every pair of `datasets`.
///
/// `results` maps model → dataset → score.
pub fn within_family_correlation(
    results: &BTreeMap<String, BTreeMap<String, f64>>,
    datasets: &[String],
) -> Result<CorrelationMatrix, AnalyticsError> {
    if results.len() < 3 {
        return Err(AnalyticsError::Invalid(format!(
            "need at least 3 models, got {}",
            results.len()
        )));
    }
    let columns = datasets
        .iter()
        .map(|d| {
            results
                .iter()
                .map(|(model, scores)| {
                    scores
                        .get(d)
                        .copied()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| AnalyticsError::MissingScore {
                            model: model.clone(),
                            dataset: d.clone(),
                        })
                })
                .collect::<Result<Vec<f64>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;

    let centered: Vec<Option<(Vec<f64>, f64)>> = columns
        .iter()
        .map(|col| {
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let dev: Vec<f64> = col.iter().map(|v| v - mean).collect();
            let norm = dev.iter().map(|d| d * d).sum::<f64>().sqrt();
            (norm > 0.0).then_some((dev, norm))
        })
        .collect();

    let k = datasets.len();
    let mut values = vec![vec![None; k]; k];
    for a in 0..k {
        for b in a..k {
            let r = match (&centered[a], &centered[b]) {
                (Some(_), Some(_)) if a == b => Some(1.0),
                (Some((da, na)), Some((db, nb))) => {
                    let dot: f64 = da.iter().zip(db).map(|(x, y)| x * y).sum();
                    Some((dot / (na * nb)).clamp(-1.0, 1.0))
                }
                _ => None,
            };
            values[a][b] = r;
            values[b][a] = r;
        }
    }
    Ok(CorrelationMatrix {
        datasets: datasets.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(cols: &[(&str, &[f64])]) -> BTreeMap<String, BTreeMap<String, f64>> {
        let n = cols[0].1.len();
        (0..n)
            .map(|m| {
                let scores = cols.iter().map(|(d, v)| (d.to_string(), v[m])).collect();
                (format!("model{m}"), scores)
            })
            .collect()
    }

    fn names(ds: &[&str]) -> Vec<String> {
        ds.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn identical_and_reversed() {
        let t = table(&[
            ("a", &[1.0, 2.0, 3.0]),
            ("b", &[1.0, 2.0, 3.0]),
            ("c", &[3.0, 2.0, 1.0]),
        ]);
        let c = within_family_correlation(&t, &names(&["a", "b", "c"])).unwrap();
        assert!((c.get(0, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!((c.get(0, 2).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(c.get(2, 2), Some(1.0));
    }

    #[test]
    fn zero_variance_is_undefined() {
        let t = table(&[("a", &[1.0, 2.0, 3.0]), ("flat", &[4.0, 4.0, 4.0])]);
        let c = within_family_correlation(&t, &names(&["a", "flat"])).unwrap();
        assert_eq!(c.get(0, 1), None);
        assert_eq!(c.get(1, 1), None);
        assert_eq!(c.get(0, 0), Some(1.0));
    }

    #[test]
    fn preconditions() {
        let t = table(&[("a", &[1.0, 2.0])]);
        assert!(matches!(
            within_family_correlation(&t, &names(&["a"])),
            Err(AnalyticsError::Invalid(_))
        ));
        let t = table(&[("a", &[1.0, 2.0, 3.0])]);
        assert!(matches!(
            within_family_correlation(&t, &names(&["a", "missing"])),
            Err(AnalyticsError::MissingScore { .. })
        ));
    }
}
