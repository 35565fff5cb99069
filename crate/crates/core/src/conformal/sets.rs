//! Prediction sets: interval unions, label subsets and the whole-space set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::invalid(format!("interval [{lo}, {hi}] has lo > hi")));
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, y: f64) -> bool {
        self.lo <= y && y <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetRepr", into = "SetRepr")]
pub enum PredictionSet {
    /// Sorted, disjoint closed intervals.
    Intervals(Vec<Interval>),
    /// Sorted, distinct outcome or class indices.
    Labels(Vec<usize>),
    /// The whole output space.
    WholeSpace,
}

impl PredictionSet {
    pub fn empty_intervals() -> Self {
        PredictionSet::Intervals(Vec::new())
    }

    /// Sorts the intervals and merges any that overlap or touch.
    pub fn from_intervals(mut intervals: Vec<Interval>) -> Result<Self> {
        if intervals.iter().any(|i| !(i.lo <= i.hi)) {
            return Err(Error::invalid("interval with lo > hi"));
        }
        intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut out: Vec<Interval> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match out.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => out.push(iv),
            }
        }
        Ok(PredictionSet::Intervals(out))
    }

    pub fn from_labels(mut labels: Vec<usize>) -> Self {
        labels.sort_unstable();
        labels.dedup();
        PredictionSet::Labels(labels)
    }

    /// Total length, label count, or `+∞` for the whole space.
    pub fn size(&self) -> f64 {
        match self {
            PredictionSet::Intervals(iv) => iv.iter().map(Interval::len).sum(),
            PredictionSet::Labels(l) => l.len() as f64,
            PredictionSet::WholeSpace => f64::INFINITY,
        }
    }

    pub fn is_whole_space(&self) -> bool {
        matches!(self, PredictionSet::WholeSpace)
    }

    /// Membership of a real value (interval sets) or a label index cast to
    /// `f64` (label sets).
    pub fn contains(&self, y: f64) -> bool {
        match self {
            PredictionSet::Intervals(iv) => iv.iter().any(|i| i.contains(y)),
            PredictionSet::Labels(l) => {
                y >= 0.0 && y.fract() == 0.0 && l.binary_search(&(y as usize)).is_ok()
            }
            PredictionSet::WholeSpace => true,
        }
    }

    pub fn contains_label(&self, label: usize) -> bool {
        match self {
            PredictionSet::Labels(l) => l.binary_search(&label).is_ok(),
            PredictionSet::WholeSpace => true,
            PredictionSet::Intervals(_) => false,
        }
    }

    pub fn intervals(&self) -> Option<&[Interval]> {
        match self {
            PredictionSet::Intervals(iv) => Some(iv),
            _ => None,
        }
    }

    pub fn labels(&self) -> Option<&[usize]> {
        match self {
            PredictionSet::Labels(l) => Some(l),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PredictionSet::Intervals(iv) => {
                for w in iv.windows(2) {
                    if !(w[0].hi < w[1].lo) {
                        return Err(Error::invalid("intervals must be sorted and disjoint"));
                    }
                }
                if iv.iter().any(|i| !(i.lo <= i.hi)) {
                    return Err(Error::invalid("interval with lo > hi"));
                }
                Ok(())
            }
            PredictionSet::Labels(l) => {
                if l.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::invalid("labels must be sorted and distinct"));
                }
                Ok(())
            }
            PredictionSet::WholeSpace => Ok(()),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetRepr {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    intervals: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<usize>>,
    /// `null` for the whole space.
    size: Option<f64>,
}

impl From<PredictionSet> for SetRepr {
    fn from(set: PredictionSet) -> Self {
        let size = set.size();
        let size = size.is_finite().then_some(size);
        match set {
            PredictionSet::Intervals(iv) => SetRepr {
                kind: "intervals".into(),
                intervals: Some(iv.iter().map(|i| [i.lo, i.hi]).collect()),
                labels: None,
                size,
            },
            PredictionSet::Labels(l) => SetRepr {
                kind: "labels".into(),
                intervals: None,
                labels: Some(l),
                size,
            },
            PredictionSet::WholeSpace => SetRepr {
                kind: "whole_space".into(),
                intervals: None,
                labels: None,
                size: None,
            },
        }
    }
}

impl TryFrom<SetRepr> for PredictionSet {
    type Error = Error;

    fn try_from(r: SetRepr) -> Result<Self> {
        let set = match (r.kind.as_str(), r.intervals, r.labels) {
            ("intervals", Some(iv), None) => PredictionSet::Intervals(
                iv.into_iter()
                    .map(|[lo, hi]| Interval::new(lo, hi))
                    .collect::<Result<_>>()?,
            ),
            ("labels", None, Some(l)) => PredictionSet::Labels(l),
            ("whole_space", None, None) => PredictionSet::WholeSpace,
            (k, _, _) => return Err(Error::invalid(format!("malformed prediction set of kind `{k}`"))),
        };
        set.validate()?;
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_and_size() {
        let s = PredictionSet::from_intervals(vec![
            Interval::new(0.5, 1.0).unwrap(),
            Interval::new(-1.0, 0.0).unwrap(),
            Interval::new(0.0, 0.25).unwrap(),
        ])
        .unwrap();
        assert_eq!(
            s.intervals().unwrap(),
            &[Interval { lo: -1.0, hi: 0.25 }, Interval { lo: 0.5, hi: 1.0 }]
        );
        assert!((s.size() - 1.75).abs() < 1e-15);
        assert!(s.contains(0.25) && !s.contains(0.3) && s.contains(1.0));
        s.validate().unwrap();
    }

    #[test]
    fn json_shapes() {
        let s = PredictionSet::from_labels(vec![3, 1, 1]);
        let j = serde_json::to_value(&s).unwrap();
        assert_eq!(j, serde_json::json!({"kind": "labels", "labels": [1, 3], "size": 2.0}));
        let w = serde_json::to_value(PredictionSet::WholeSpace).unwrap();
        assert_eq!(w, serde_json::json!({"kind": "whole_space", "size": null}));
        let iv = PredictionSet::Intervals(vec![Interval { lo: -0.5, hi: 0.5 }]);
        let back: PredictionSet = serde_json::from_str(&serde_json::to_string(&iv).unwrap()).unwrap();
        assert_eq!(back, iv);
        assert!(serde_json::from_str::<PredictionSet>(
            r#"{"kind":"intervals","intervals":[[1.0,0.0]],"size":1.0}"#
        )
        .is_err());
    }

    #[test]
    fn whole_space_covers() {
        let s = PredictionSet::WholeSpace;
        assert!(s.contains(1e300) && s.contains_label(7));
        assert_eq!(s.size(), f64::INFINITY);
    }
}
