use super::nbbm::Event;
use crate::ensemble::ParticleEnsemble;
use crate::fmt::num;
use std::fmt::Write;

/// `time,label,x1..xd`, one row per particle per snapshot.
pub fn snapshots_to_csv(snapshots: &[ParticleEnsemble]) -> String {
    let dim = snapshots.first().map_or(1, |s| s.dim());
    let mut out = String::from("time,label");
    for i in 1..=dim {
        write!(out, ",x{i}").unwrap();
    }
    out.push('\n');
    for s in snapshots {
        let t = num(s.clock());
        for (k, p) in s.points().enumerate() {
            write!(out, "{t},{k}").unwrap();
            for c in p {
                write!(out, ",{}", num(*c)).unwrap();
            }
            out.push('\n');
        }
    }
    out
}

/// `time,branching_label,removed_label`.
pub fn events_to_csv(events: &[Event]) -> String {
    let mut out = String::from("time,branching_label,removed_label\n");
    for e in events {
        writeln!(out, "{},{},{}", num(e.time), e.branching, e.removed).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_layout() {
        let e = ParticleEnsemble::from_points(2, &[vec![1.0, 0.0], vec![0.0, -2.0]]).unwrap();
        let csv = snapshots_to_csv(&[e]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "time,label,x1,x2");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("0,1,0,"));
    }

    #[test]
    fn event_layout() {
        let csv = events_to_csv(&[Event { time: 0.5, branching: 3, removed: 7 }]);
        assert_eq!(csv.lines().nth(1).unwrap(), "5.0000000000000000e-1,3,7");
    }
}
