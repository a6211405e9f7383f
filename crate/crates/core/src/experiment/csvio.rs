//! Dataset CSV serialization.
//!
//! Datasets are `time,y` rows at sampling times; an optional trailing
//! `x_true` column is accepted on read and ignored. Ground truth is stored
//! in a sibling file as `time,x_true` over the full fine grid (N+1 rows
//! including t0).

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::series::{LatentPath, ObservationSeries};

pub fn write_dataset(
    grid: &TimeGrid,
    y: &ObservationSeries,
    out: &mut dyn Write,
) -> std::io::Result<()> {
    writeln!(out, "time,y")?;
    for j in 1..=grid.n() {
        writeln!(out, "{},{}", grid.sampling_time(j), y.at(j)[0])?;
    }
    Ok(())
}

pub fn write_truth(grid: &TimeGrid, x: &LatentPath, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "time,x_true")?;
    for i in 0..=grid.n_fine() {
        writeln!(out, "{},{}", grid.fine_time(i), x.at_fine(i)[0])?;
    }
    Ok(())
}

/// Read a scalar dataset, checking row count against the grid.
pub fn read_dataset(reader: &mut dyn BufRead, grid: &TimeGrid) -> Result<ObservationSeries> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::invalid("dataset", "empty file"))??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.len() < 2 || cols[0] != "time" || cols[1] != "y" {
        return Err(Error::invalid(
            "dataset",
            format!("expected header starting with `time,y`, got `{header}`"),
        ));
    }
    let mut values = Vec::new();
    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() < 2 {
            return Err(Error::invalid(
                "dataset",
                format!("row {}: expected at least 2 columns", row + 2),
            ));
        }
        let y: f64 = fields[1]
            .parse()
            .map_err(|_| Error::invalid("dataset", format!("row {}: bad number `{}`", row + 2, fields[1])))?;
        values.push(y);
    }
    if values.len() != grid.n() {
        return Err(Error::DimensionMismatch {
            what: "dataset rows vs grid",
            expected: grid.n(),
            got: values.len(),
        });
    }
    Ok(ObservationSeries::scalar(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_round_trip() {
        let grid = TimeGrid::new(0.0, 1.0, 3, 2).unwrap();
        let y = ObservationSeries::scalar(vec![0.25, -1.5, 3.0]);
        let mut buf = Vec::new();
        write_dataset(&grid, &y, &mut buf).unwrap();
        let back = read_dataset(&mut buf.as_slice(), &grid).unwrap();
        assert_eq!(back, y);
    }

    #[test]
    fn extra_truth_column_is_tolerated() {
        let grid = TimeGrid::new(0.0, 1.0, 2, 1).unwrap();
        let text = "time,y,x_true\n1,0.5,0.4\n2,0.7,0.8\n";
        let back = read_dataset(&mut text.as_bytes(), &grid).unwrap();
        assert_eq!(back.values(), &[0.5, 0.7]);
    }

    #[test]
    fn row_count_mismatch_is_an_error() {
        let grid = TimeGrid::new(0.0, 1.0, 3, 1).unwrap();
        let text = "time,y\n1,0.5\n";
        assert!(read_dataset(&mut text.as_bytes(), &grid).is_err());
    }

    #[test]
    fn truth_file_covers_the_fine_grid() {
        let grid = TimeGrid::new(0.0, 1.0, 2, 3).unwrap();
        let x = LatentPath::scalar(8.0, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let mut buf = Vec::new();
        write_truth(&grid, &x, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 7); // header + N+1 rows
    }
}
