//! User-satisfaction arithmetic on 1-5 Likert scores.

use serde::{Deserialize, Serialize};

pub const SCALE_MAX: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SurveyError {
    #[error("no scores given")]
    Empty,
    #[error("score {value} at {position} is outside 1-5")]
    OutOfScale { position: String, value: f64 },
    #[error("row {row} has {got} scores, expected {expected}")]
    Ragged {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("alpha needs at least 2 questions and 2 participants, got {questions}x{participants}")]
    TooSmall {
        questions: usize,
        participants: usize,
    },
    #[error("total scores do not vary, alpha is undefined")]
    ZeroVariance,
}

fn check_score(position: impl FnOnce() -> String, value: f64) -> Result<(), SurveyError> {
    if (1.0..=SCALE_MAX).contains(&value) {
        Ok(())
    } else {
        Err(SurveyError::OutOfScale {
            position: position(),
            value,
        })
    }
}

/// Degree of satisfaction for one question: mean score over the maximum.
pub fn dus(scores: &[f64]) -> Result<f64, SurveyError> {
    if scores.is_empty() {
        return Err(SurveyError::Empty);
    }
    for (i, s) in scores.iter().enumerate() {
        check_score(|| format!("participant {}", i + 1), *s)?;
    }
    Ok(scores.iter().sum::<f64>() / (SCALE_MAX * scores.len() as f64))
}

/// Same, from an already averaged score.
pub fn dus_from_mean(mean: f64) -> Result<f64, SurveyError> {
    check_score(|| "mean".into(), mean)?;
    Ok(mean / SCALE_MAX)
}

/// Scores by question (rows) and participant (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SurveyMatrix {
    rows: Vec<Vec<f64>>,
}

impl SurveyMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, SurveyError> {
        let width = rows.first().map(Vec::len).ok_or(SurveyError::Empty)?;
        if width == 0 {
            return Err(SurveyError::Empty);
        }
        for (q, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(SurveyError::Ragged {
                    row: q + 1,
                    got: row.len(),
                    expected: width,
                });
            }
            for (p, v) in row.iter().enumerate() {
                check_score(|| format!("question {}, participant {}", q + 1, p + 1), *v)?;
            }
        }
        Ok(Self { rows })
    }

    pub fn questions(&self) -> usize {
        self.rows.len()
    }

    pub fn participants(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, q: usize) -> &[f64] {
        &self.rows[q]
    }

    pub fn dus_per_question(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| dus(r).expect("validated on construction"))
            .collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for SurveyMatrix {
    type Error = SurveyError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        Self::new(rows)
    }
}

impl From<SurveyMatrix> for Vec<Vec<f64>> {
    fn from(m: SurveyMatrix) -> Self {
        m.rows
    }
}

fn sample_variance(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Cronbach's alpha with questions as items:
/// `L/(L-1) * (1 - sum of item variances / variance of participant totals)`.
pub fn cronbach_alpha(m: &SurveyMatrix) -> Result<f64, SurveyError> {
    let (l, k) = (m.questions(), m.participants());
    if l < 2 || k < 2 {
        return Err(SurveyError::TooSmall {
            questions: l,
            participants: k,
        });
    }
    let item_var: f64 = m
        .rows
        .iter()
        .map(|r| sample_variance(r.iter().copied()))
        .sum();
    let totals: Vec<f64> = (0..k).map(|p| m.rows.iter().map(|r| r[p]).sum()).collect();
    let total_var = sample_variance(totals.iter().copied());
    if total_var == 0.0 {
        return Err(SurveyError::ZeroVariance);
    }
    let l = l as f64;
    Ok(l / (l - 1.0) * (1.0 - item_var / total_var))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dus_bounds_and_errors() {
        assert_eq!(dus(&[5.0; 4]).unwrap(), 1.0);
        assert_eq!(dus(&[1.0; 4]).unwrap(), 0.2);
        assert_eq!(dus(&[]), Err(SurveyError::Empty));
        assert!(matches!(dus(&[6.0]), Err(SurveyError::OutOfScale { .. })));
        assert!((dus_from_mean(4.8).unwrap() - 0.96).abs() < 1e-12);
        assert!((dus_from_mean(4.46).unwrap() - 0.892).abs() < 1e-12);
    }

    #[test]
    fn alpha_for_identical_items_is_one() {
        let m = SurveyMatrix::new(vec![vec![1.0, 3.0, 5.0, 4.0]; 3]).unwrap();
        assert!((cronbach_alpha(&m).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_errors() {
        let constant = SurveyMatrix::new(vec![vec![4.0; 5]; 3]).unwrap();
        assert_eq!(cronbach_alpha(&constant), Err(SurveyError::ZeroVariance));
        let one = SurveyMatrix::new(vec![vec![4.0, 5.0]]).unwrap();
        assert!(matches!(
            cronbach_alpha(&one),
            Err(SurveyError::TooSmall { .. })
        ));
        assert!(matches!(
            SurveyMatrix::new(vec![vec![4.0, 5.0], vec![3.0]]),
            Err(SurveyError::Ragged { row: 2, .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn dus_stays_in_range(scores in proptest::collection::vec(1u8..=5, 1..50)) {
                let s: Vec<f64> = scores.into_iter().map(f64::from).collect();
                let d = dus(&s).unwrap();
                prop_assert!((0.2..=1.0).contains(&d));
            }
        }
    }
}
