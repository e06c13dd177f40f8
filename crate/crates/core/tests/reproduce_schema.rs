use std::collections::BTreeMap;
use std::path::Path;

use bsm::metrics::CSV_HEADER;
use bsm::reproduce::{figure_file_name, reproduce, Figure, Study, StudyConfig};

/// `file metric method ear count` lines, sorted.
fn summarize(path: &Path) -> (String, Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    let mut counts: BTreeMap<(String, String, String), usize> = BTreeMap::new();
    for r in &rows {
        assert_eq!(r.len(), 5, "{r:?}");
        let ear = if r[2].is_empty() { "-".to_string() } else { r[2].clone() };
        *counts.entry((r[3].clone(), r[4].clone(), ear)).or_default() += 1;
    }
    let name = path.file_name().unwrap().to_string_lossy().to_string();
    let summary = counts.into_iter().map(|((m, meth, ear), n)| format!("{name} {m} {meth} {ear} {n}")).collect();
    (header, summary, rows)
}

#[test]
fn figure_csvs_match_golden_schema() {
    let study = Study::new(StudyConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let runs = [(Figure::Fig4, 0.0), (Figure::Fig5, 0.0), (Figure::Fig6, 30.0), (Figure::Fig7, 0.0), (Figure::Fig8, 60.0)];
    let mut summary = Vec::new();
    for (fig, rot) in runs {
        let written = reproduce(&study, fig, &[rot], dir.path()).unwrap();
        assert_eq!(written, vec![dir.path().join(figure_file_name(fig, rot))]);
        let (header, lines, rows) = summarize(&written[0]);
        assert_eq!(header, CSV_HEADER.join(","));
        assert_eq!(header, "axis,value,ear,metric,method");
        for r in &rows {
            let axis: f64 = r[0].parse().unwrap();
            let value: f64 = r[1].parse().unwrap();
            assert!(axis.is_finite() && value.is_finite(), "{r:?}");
        }
        if fig == Figure::Fig7 {
            let axes: Vec<f64> = rows.iter().filter(|r| r[4] == "reference").map(|r| r[0].parse().unwrap()).collect();
            assert_eq!(axes, (0..360).map(f64::from).collect::<Vec<_>>());
        }
        if fig == Figure::Fig4 {
            let axes: Vec<f64> = rows.iter().filter(|r| r[2] == "left").map(|r| r[0].parse().unwrap()).collect();
            assert_eq!(axes.first(), Some(&75.0));
            assert_eq!(axes.last(), Some(&9975.0));
        }
        summary.extend(lines);
    }
    let golden: Vec<String> = include_str!("data/reproduce_schema.txt").lines().map(String::from).collect();
    assert_eq!(summary, golden);
}

#[test]
fn file_names() {
    assert_eq!(figure_file_name(Figure::Fig4, 30.0), "fig4.csv");
    assert_eq!(figure_file_name(Figure::Fig6, 30.0), "fig6_rot30.csv");
    assert_eq!(figure_file_name(Figure::Fig8, 60.0), "fig8_rot60.csv");
    assert_eq!("fig7".parse::<Figure>().unwrap(), Figure::Fig7);
    assert!("fig9".parse::<Figure>().is_err());
}
