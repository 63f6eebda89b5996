//! Vortex boundaries as a GeoJSON FeatureCollection: one Polygon feature per
//! eddy, ring closed by repeating the first vertex.

use serde_json::{json, Value};
use vortex_core::lambda_lines::Branch;
use vortex_core::Point;

use crate::pipeline::Eddy;

pub fn boundaries_to_geojson(eddies: &[Eddy]) -> String {
    let features: Vec<Value> = eddies
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let b = &e.boundary;
            let v = b.polygon.vertices();
            let ring: Vec<[f64; 2]> = v.iter().chain(v.first()).map(|p| [p.x, p.y]).collect();
            json!({
                "type": "Feature",
                "id": k,
                "geometry": { "type": "Polygon", "coordinates": [ring] },
                "properties": {
                    "lambda": b.lambda,
                    "sign": b.branch.as_str(),
                    "wedges": b.census.wedges,
                    "trisectors": b.census.trisectors,
                    "area": b.polygon.area(),
                    "pair": e.pair,
                    "seed_coordinate": b.seed_coordinate,
                    "closure_error": b.closure_error,
                    "stretching_ratio": e.stretching_ratio,
                }
            })
        })
        .collect();
    let doc = json!({ "type": "FeatureCollection", "features": features });
    serde_json::to_string(&doc).expect("geojson serializes") + "\n"
}

/// Boundary summary as read back from a GeoJSON file.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFeature {
    pub lambda: f64,
    pub branch: Branch,
    pub wedges: usize,
    pub trisectors: usize,
    pub area: f64,
    pub stretching_ratio: Option<f64>,
    /// Open ring: the closing vertex is dropped.
    pub vertices: Vec<Point>,
}

pub fn read_boundaries(text: &str) -> Result<Vec<BoundaryFeature>, String> {
    let doc: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if doc["type"] != "FeatureCollection" {
        return Err("not a FeatureCollection".into());
    }
    let features = doc["features"].as_array().ok_or("missing features array")?;
    features.iter().enumerate().map(|(k, f)| feature(f).map_err(|e| format!("feature {k}: {e}"))).collect()
}

fn feature(f: &Value) -> Result<BoundaryFeature, String> {
    let props = &f["properties"];
    let num = |key: &str| props[key].as_f64().ok_or_else(|| format!("missing numeric property '{key}'"));
    let count = |key: &str| props[key].as_u64().map(|n| n as usize).ok_or_else(|| format!("missing count '{key}'"));
    let branch = props["sign"].as_str().and_then(Branch::parse).ok_or("missing or bad 'sign'")?;
    if f["geometry"]["type"] != "Polygon" {
        return Err("geometry is not a Polygon".into());
    }
    let ring = f["geometry"]["coordinates"][0].as_array().ok_or("missing outer ring")?;
    let mut vertices = ring
        .iter()
        .map(|c| match (c[0].as_f64(), c[1].as_f64()) {
            (Some(x), Some(y)) => Ok(Point::new(x, y)),
            _ => Err("bad coordinate pair".to_string()),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if vertices.len() < 4 || vertices.first() != vertices.last() {
        return Err("ring is not closed".into());
    }
    vertices.pop();
    Ok(BoundaryFeature {
        lambda: num("lambda")?,
        branch,
        wedges: count("wedges")?,
        trisectors: count("trisectors")?,
        area: num("area")?,
        stretching_ratio: props["stretching_ratio"].as_f64(),
        vertices,
    })
}
