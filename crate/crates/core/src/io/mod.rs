//! File formats: curve CSV, outcome event files and SVG plots.

mod curve_csv;
mod events;
mod svg;

pub use curve_csv::{
    format_number, read_curve, read_curve_file, write_curve, write_curve_file, CURVE_HEADER,
};
pub use events::{
    analyze_events, read_event_file, read_events, write_analysis, write_events, EventAnalysis,
    GroupEstimate, OutcomeRecord, ANALYSIS_HEADER,
};
pub use svg::{render_svg, write_svg_file, PlotSeries, SVG_HEIGHT, SVG_WIDTH, Y_MAX, Y_MIN};

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn create_file(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn finish(path: &Path, mut w: impl Write) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}
