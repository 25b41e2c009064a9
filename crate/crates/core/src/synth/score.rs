use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::GroundTruth;
use crate::econ::pearson;

/// What the pipeline reported, in the shape the scorer needs.
#[derive(Debug, Clone, Default)]
pub struct Detected {
    pub officers: BTreeSet<String>,
    /// Home cell per device (any half).
    pub homes: BTreeMap<String, Vec<String>>,
    /// `(device_id, start_ts, end_ts)`.
    pub shifts: Vec<(String, i64, i64)>,
    pub bg_hours: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scores {
    pub n_true_officers: usize,
    pub n_detected_officers: usize,
    /// 1.0 when nothing was detected.
    pub officer_precision: f64,
    /// 1.0 when there is nothing to find.
    pub officer_recall: f64,
    pub n_true_shifts: usize,
    pub n_matched_shifts: usize,
    /// Mean IoU over detected shifts matched to a true shift of the same
    /// device; `None` when nothing matched.
    pub mean_iou: Option<f64>,
    /// Pearson correlation of detected hours with the planted expectation.
    pub hours_rho_planted: Option<f64>,
    /// Pearson correlation with realized patrol hours.
    pub hours_rho_realized: Option<f64>,
    /// Share of true officers whose detected home matches the planted cell.
    pub home_hit_rate: Option<f64>,
}

fn iou((a0, a1): (i64, i64), (b0, b1): (i64, i64)) -> f64 {
    let inter = (a1.min(b1) - a0.max(b0)).max(0) as f64;
    let union = (a1.max(b1) - a0.min(b0)) as f64;
    if union <= 0.0 {
        // both degenerate at the same instant
        if a0 == b0 { 1.0 } else { 0.0 }
    } else {
        inter / union
    }
}

/// Compares pipeline output against the planted truth. Each detected shift
/// is matched to the overlapping true shift of its device with the largest
/// IoU; true shifts are used at most once.
pub fn score(detected: &Detected, truth: &GroundTruth) -> Scores {
    let true_ids: BTreeSet<&str> = truth.officers.iter().map(|o| o.device_id.as_str()).collect();
    let hits = detected.officers.iter().filter(|d| true_ids.contains(d.as_str())).count();
    let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };

    let mut by_device: BTreeMap<&str, Vec<((i64, i64), bool)>> = BTreeMap::new();
    for s in &truth.shifts {
        by_device.entry(&s.device_id).or_default().push((s.interval(), false));
    }
    let mut ious = Vec::new();
    let mut det = detected.shifts.clone();
    det.sort();
    for (dev, a, b) in &det {
        let Some(cands) = by_device.get_mut(dev.as_str()) else {
            continue;
        };
        let best = cands
            .iter_mut()
            .filter(|(_, used)| !used)
            .map(|c| (iou((*a, *b), c.0), c))
            .filter(|(v, _)| *v > 0.0)
            .max_by(|x, y| x.0.total_cmp(&y.0));
        if let Some((v, c)) = best {
            c.1 = true;
            ious.push(v);
        }
    }

    let ids: Vec<&String> = truth.bg_hours.keys().collect();
    let got: Vec<f64> = ids.iter().map(|id| detected.bg_hours.get(*id).copied().unwrap_or(0.0)).collect();
    let planted: Vec<f64> = ids.iter().map(|id| truth.bg_hours[*id].expected_hours).collect();
    let realized: Vec<f64> = ids.iter().map(|id| truth.bg_hours[*id].realized_hours).collect();

    let home_hits = truth
        .officers
        .iter()
        .filter(|o| {
            detected
                .homes
                .get(&o.device_id)
                .is_some_and(|cells| cells.contains(&o.home_cell))
        })
        .count();

    Scores {
        n_true_officers: true_ids.len(),
        n_detected_officers: detected.officers.len(),
        officer_precision: ratio(hits, detected.officers.len()),
        officer_recall: ratio(hits, true_ids.len()),
        n_true_shifts: truth.shifts.len(),
        n_matched_shifts: ious.len(),
        mean_iou: (!ious.is_empty()).then(|| ious.iter().sum::<f64>() / ious.len() as f64),
        hours_rho_planted: pearson(&got, &planted),
        hours_rho_realized: pearson(&got, &realized),
        home_hit_rate: (!truth.officers.is_empty()).then(|| home_hits as f64 / truth.officers.len() as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{TrueBgHours, TrueOfficer, TrueShift};

    fn truth(n: usize) -> GroundTruth {
        GroundTruth {
            officers: (0..n)
                .map(|i| TrueOfficer {
                    device_id: format!("o{i}"),
                    city_id: "c".into(),
                    station_id: "s".into(),
                    home_cell: "dp3wjzt".into(),
                    home_bg: None,
                })
                .collect(),
            civilians: vec![],
            shifts: vec![TrueShift {
                device_id: "o0".into(),
                leave_home: 0,
                arrive_station: 100,
                depart_station: 200,
                return_home: 300,
                observed_start: Some(110),
                observed_end: Some(190),
            }],
            bg_hours: (0..3)
                .map(|i| {
                    (
                        format!("b{i}"),
                        TrueBgHours {
                            city_id: "c".into(),
                            weight: 1.0 + i as f64,
                            expected_hours: 1.0 + i as f64,
                            realized_hours: 1.0 + i as f64,
                        },
                    )
                })
                .collect(),
        }
    }

    fn perfect(t: &GroundTruth) -> Detected {
        Detected {
            officers: t.officers.iter().map(|o| o.device_id.clone()).collect(),
            homes: t
                .officers
                .iter()
                .map(|o| (o.device_id.clone(), vec![o.home_cell.clone()]))
                .collect(),
            shifts: vec![("o0".into(), 110, 190)],
            bg_hours: t.bg_hours.iter().map(|(k, v)| (k.clone(), v.realized_hours)).collect(),
        }
    }

    #[test]
    fn perfect_detection_scores_one() {
        let t = truth(10);
        let s = score(&perfect(&t), &t);
        assert_eq!(s.officer_precision, 1.0);
        assert_eq!(s.officer_recall, 1.0);
        assert_eq!(s.mean_iou, Some(1.0));
        assert!((s.hours_rho_planted.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(s.home_hit_rate, Some(1.0));
    }

    #[test]
    fn one_false_officer() {
        let t = truth(10);
        let mut d = perfect(&t);
        d.officers.insert("civ".into());
        let s = score(&d, &t);
        assert!((s.officer_precision - 10.0 / 11.0).abs() < 1e-12);
        assert_eq!(s.officer_recall, 1.0);
    }

    #[test]
    fn partial_overlap_iou() {
        let t = truth(1);
        let mut d = perfect(&t);
        d.shifts = vec![("o0".into(), 150, 230)];
        let s = score(&d, &t);
        // overlap 40 over union 120
        assert!((s.mean_iou.unwrap() - 40.0 / 120.0).abs() < 1e-12);
    }
}
