//! JSON bodies of the metadata endpoints. `docs/API.md` is the normative
//! description of both shapes.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::container::{Encoding, LayerInfo, SlideMetadata};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extent {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerDoc {
    pub x_tiles: u32,
    pub y_tiles: u32,
    pub scale: f64,
}

/// Body of `GET /slides/<slide>/metadata`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlideMetadataDoc {
    pub slide: String,
    pub extent: Extent,
    pub tile_size: u32,
    pub encoding: Encoding,
    pub layers: Vec<LayerDoc>,
}

impl From<&SlideMetadata> for SlideMetadataDoc {
    fn from(meta: &SlideMetadata) -> Self {
        SlideMetadataDoc {
            slide: meta.slide_name.to_string(),
            extent: Extent {
                width: meta.extent_x,
                height: meta.extent_y,
            },
            tile_size: meta.tile_size,
            encoding: meta.encoding,
            layers: meta
                .layers
                .iter()
                .map(|l| LayerDoc {
                    x_tiles: l.x_tiles,
                    y_tiles: l.y_tiles,
                    scale: l.scale.as_f64(),
                })
                .collect(),
        }
    }
}

pub mod dicom_tags {
    pub const STUDY_INSTANCE_UID: &str = "0020000D";
    pub const SERIES_INSTANCE_UID: &str = "0020000E";
    pub const INSTANCE_NUMBER: &str = "00200013";
    pub const SAMPLES_PER_PIXEL: &str = "00280002";
    pub const PHOTOMETRIC_INTERPRETATION: &str = "00280004";
    pub const NUMBER_OF_FRAMES: &str = "00280008";
    pub const ROWS: &str = "00280010";
    pub const COLUMNS: &str = "00280011";
    pub const TOTAL_PIXEL_MATRIX_COLUMNS: &str = "00480006";
    pub const TOTAL_PIXEL_MATRIX_ROWS: &str = "00480007";
    pub const TRANSFER_SYNTAX_UID: &str = "00020010";
}

const JPEG_BASELINE: &str = "1.2.840.10008.1.2.4.50";
const EXPLICIT_VR_LITTLE_ENDIAN: &str = "1.2.840.10008.1.2.1";

fn attr(vr: &str, value: Value) -> Value {
    json!({ "vr": vr, "Value": [value] })
}

/// One DICOM JSON dataset describing layer `index` as a WADO instance whose
/// frames are the layer's tiles in raster order.
pub fn wado_instance(
    meta: &SlideMetadata,
    study: &str,
    series: &str,
    index: u32,
    layer: &LayerInfo,
) -> Value {
    use dicom_tags::*;
    let (width, height) = meta.layer_extent(layer);
    let (photometric, syntax) = match meta.encoding {
        Encoding::Jpeg => ("YBR_FULL_422", JPEG_BASELINE),
        Encoding::Png => ("RGB", EXPLICIT_VR_LITTLE_ENDIAN),
    };
    json!({
        STUDY_INSTANCE_UID: attr("UI", json!(study)),
        SERIES_INSTANCE_UID: attr("UI", json!(series)),
        INSTANCE_NUMBER: attr("IS", json!(index)),
        SAMPLES_PER_PIXEL: attr("US", json!(3)),
        PHOTOMETRIC_INTERPRETATION: attr("CS", json!(photometric)),
        NUMBER_OF_FRAMES: attr("IS", json!(layer.tile_count())),
        ROWS: attr("US", json!(meta.tile_size)),
        COLUMNS: attr("US", json!(meta.tile_size)),
        TOTAL_PIXEL_MATRIX_COLUMNS: attr("UL", json!(width)),
        TOTAL_PIXEL_MATRIX_ROWS: attr("UL", json!(height)),
        TRANSFER_SYNTAX_UID: attr("UI", json!(syntax)),
    })
}

/// Body of `GET /studies/<study>/series/<series>/metadata`: one dataset per
/// layer, in layer order.
pub fn wado_series(meta: &SlideMetadata, study: &str, series: &str) -> Value {
    Value::Array(
        meta.layers
            .iter()
            .enumerate()
            .map(|(i, l)| wado_instance(meta, study, series, i as u32, l))
            .collect(),
    )
}

/// Reads the single value of a numeric DICOM JSON attribute.
pub fn dicom_u64(dataset: &Value, tag: &str) -> Option<u64> {
    dataset.get(tag)?.get("Value")?.get(0)?.as_u64()
}
