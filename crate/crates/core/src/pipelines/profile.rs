//! One-row intensity profiles across several filter outputs.

use crate::error::{Error, Result};
use crate::image::ImagePlane;

/// CSV with columns `x,input,<name>...`, one line per column of row `row`.
pub fn row_profile(x: &ImagePlane, outputs: &[(String, ImagePlane)], row: usize) -> Result<String> {
    if row >= x.height() {
        return Err(Error::param(format!(
            "row {row} is outside an image of height {}",
            x.height()
        )));
    }
    for (name, p) in outputs {
        x.check_shape(p, &format!("input and output {name:?}"))?;
    }
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["x".to_string(), "input".to_string()];
    header.extend(outputs.iter().map(|(n, _)| n.clone()));
    wtr.write_record(&header).map_err(csv_error)?;
    for col in 0..x.width() {
        let mut rec = vec![col.to_string(), x.get(col, row).to_string()];
        rec.extend(outputs.iter().map(|(_, p)| p.get(col, row).to_string()));
        wtr.write_record(&rec).map_err(csv_error)?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}
