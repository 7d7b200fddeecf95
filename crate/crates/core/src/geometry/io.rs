//! Rig and correspondence files in the shared `key=value` grammar.
//!
//! ```text
//! cam_a.cx=0
//! cam_a.cy=0
//! cam_a.focal_px=500
//! cam_a.rotation=1,0,0,0,1,0,0,0,1
//! cam_a.translation=0,0,0
//! ...
//! pair.0.a.u=12.5
//! pair.0.a.v=-3
//! pair.0.b.u=-87.5
//! pair.0.b.v=-3
//! ```
//!
//! Both can live in one file.

use super::{
    CameraRig, Correspondence, CorrespondenceSet, GeometryError, Mat3, PinholeCamera, Pixel, Vec3,
};
use crate::canon::Record;
use crate::scalar::{lit, Real};

fn err(msg: impl Into<String>) -> GeometryError {
    GeometryError::Format(msg.into())
}

fn scalar<T: Real>(record: &Record, key: &str) -> Result<T, GeometryError> {
    let raw = record
        .get(key)
        .ok_or_else(|| err(format!("missing key `{key}`")))?;
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| err(format!("`{key}`: not a number: {raw}")))?;
    if !v.is_finite() {
        return Err(err(format!("`{key}`: not finite")));
    }
    Ok(lit(v))
}

fn list<T: Real, const N: usize>(record: &Record, key: &str) -> Result<[T; N], GeometryError> {
    let raw = record
        .get(key)
        .ok_or_else(|| err(format!("missing key `{key}`")))?;
    let parts: Vec<f64> = raw
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| err(format!("`{key}`: not a number list")))?;
    if parts.len() != N || parts.iter().any(|v| !v.is_finite()) {
        return Err(err(format!("`{key}`: expected {N} finite numbers")));
    }
    Ok(std::array::from_fn(|i| lit(parts[i])))
}

fn join<T: Real>(vals: impl IntoIterator<Item = T>) -> String {
    vals.into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn read_camera<T: Real>(record: &Record, name: &str) -> Result<PinholeCamera<T>, GeometryError> {
    let r: [T; 9] = list(record, &format!("{name}.rotation"))?;
    let t: [T; 3] = list(record, &format!("{name}.translation"))?;
    PinholeCamera::new(
        scalar(record, &format!("{name}.focal_px"))?,
        (
            scalar(record, &format!("{name}.cx"))?,
            scalar(record, &format!("{name}.cy"))?,
        ),
        Mat3([[r[0], r[1], r[2]], [r[3], r[4], r[5]], [r[6], r[7], r[8]]]),
        Vec3(t),
    )
}

fn write_camera<T: Real>(record: &mut Record, name: &str, cam: &PinholeCamera<T>) {
    record.insert(format!("{name}.focal_px"), cam.focal_px);
    record.insert(format!("{name}.cx"), cam.principal_point.0);
    record.insert(format!("{name}.cy"), cam.principal_point.1);
    record.insert(
        format!("{name}.rotation"),
        join(cam.rotation.0.into_iter().flatten()),
    );
    record.insert(format!("{name}.translation"), join(cam.translation.0));
}

pub fn rig_from_record<T: Real>(record: &Record) -> Result<CameraRig<T>, GeometryError> {
    CameraRig::new(read_camera(record, "cam_a")?, read_camera(record, "cam_b")?)
}

pub fn rig_to_record<T: Real>(rig: &CameraRig<T>, record: &mut Record) {
    write_camera(record, "cam_a", &rig.cam_a);
    write_camera(record, "cam_b", &rig.cam_b);
}

pub fn correspondences_from_record<T: Real>(
    record: &Record,
) -> Result<CorrespondenceSet<T>, GeometryError> {
    let mut indices: Vec<usize> = Vec::new();
    for (rest, _) in record.with_prefix("pair.") {
        let idx = rest.split('.').next().unwrap_or("");
        let idx: usize = idx
            .parse()
            .map_err(|_| err(format!("bad pair index in `pair.{rest}`")))?;
        if indices.last() != Some(&idx) && !indices.contains(&idx) {
            indices.push(idx);
        }
    }
    indices.sort_unstable();
    if indices.iter().enumerate().any(|(i, &idx)| i != idx) {
        return Err(err("pair indices must be contiguous from 0"));
    }
    let pairs = indices
        .iter()
        .map(|i| {
            Ok(Correspondence {
                a: Pixel::new(
                    scalar(record, &format!("pair.{i}.a.u"))?,
                    scalar(record, &format!("pair.{i}.a.v"))?,
                ),
                b: Pixel::new(
                    scalar(record, &format!("pair.{i}.b.u"))?,
                    scalar(record, &format!("pair.{i}.b.v"))?,
                ),
            })
        })
        .collect::<Result<Vec<_>, GeometryError>>()?;
    CorrespondenceSet::new(pairs)
}

pub fn correspondences_to_record<T: Real>(set: &CorrespondenceSet<T>, record: &mut Record) {
    for (i, p) in set.pairs.iter().enumerate() {
        record.insert(format!("pair.{i}.a.u"), p.a.u);
        record.insert(format!("pair.{i}.a.v"), p.a.v);
        record.insert(format!("pair.{i}.b.u"), p.b.u);
        record.insert(format!("pair.{i}.b.v"), p.b.v);
    }
}

/// Parses a file holding both a rig and its correspondences.
pub fn parse_geometry<T: Real>(
    text: &str,
) -> Result<(CameraRig<T>, CorrespondenceSet<T>), GeometryError> {
    let record = Record::parse_lenient(text).map_err(|e| err(e.to_string()))?;
    Ok((
        rig_from_record(&record)?,
        correspondences_from_record(&record)?,
    ))
}

pub fn geometry_to_string<T: Real>(rig: &CameraRig<T>, set: &CorrespondenceSet<T>) -> String {
    let mut record = Record::new();
    rig_to_record(rig, &mut record);
    correspondences_to_record(set, &mut record);
    record.to_canonical_string()
}
