//! End-to-end figure generation at reduced sweep resolution.

use adialab::lab::figures::{reproduce_figure_with, FigureId, FigureOptions};

fn quick() -> FigureOptions {
    FigureOptions {
        sweep_points: 48,
        record_stride: 10,
    }
}

#[test]
fn sweep_figures_emit_one_file_set_per_path_group() {
    let dir = tempfile::tempdir().unwrap();
    for (id, paths) in [
        (FigureId::Fig6, 2usize),
        (FigureId::Fig7, 3),
        (FigureId::Fig8, 1),
    ] {
        let report = reproduce_figure_with(id, dir.path(), &quick()).unwrap();
        // one CSV per path plus metadata and plot script
        assert_eq!(report.files.len(), paths + 2, "{id}");
        assert!(
            report.checks.is_empty(),
            "{id} carries no quantitative claim"
        );
        for f in &report.files {
            assert!(f.exists());
        }
    }
}

#[test]
fn comparison_figure_reports_the_ordering_check() {
    let dir = tempfile::tempdir().unwrap();
    let report = reproduce_figure_with(FigureId::Fig9, dir.path(), &quick()).unwrap();
    assert_eq!(report.files.len(), 8); // six curves + metadata + plot script
    assert_eq!(report.checks.len(), 1);
    // the ordering claim is evaluated and reported either way; its outcome
    // is asserted by the acceptance suite, not here
    assert!(report.checks[0].description.contains("T=100"));

    let csv = std::fs::read_to_string(&report.files[0]).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "T,delta_raw,delta_smoothed");
    assert!(lines.next().unwrap().split(',').count() == 3);
}
