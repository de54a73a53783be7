use rand::Rng;

use crate::container::{LayerInfo, Scale};
use crate::router::tile_index;
use crate::schema::LayerDoc;

/// A sampled tile request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TilePick {
    pub layer: u32,
    pub x: u32,
    pub y: u32,
    pub tile: u32,
}

/// Picks a layer uniformly, then a grid cell uniformly within it.
#[derive(Debug, Clone)]
pub struct TileSampler {
    layers: Vec<LayerInfo>,
}

impl TileSampler {
    pub fn new(layers: Vec<LayerInfo>) -> Option<Self> {
        if layers.is_empty() || layers.iter().any(|l| l.x_tiles == 0 || l.y_tiles == 0) {
            return None;
        }
        Some(TileSampler { layers })
    }

    /// From the metadata document; only grid sizes are needed.
    pub fn from_docs(layers: &[LayerDoc]) -> Option<Self> {
        Self::new(
            layers
                .iter()
                .map(|l| LayerInfo {
                    x_tiles: l.x_tiles,
                    y_tiles: l.y_tiles,
                    scale: Scale::ONE,
                })
                .collect(),
        )
    }

    pub fn layers(&self) -> &[LayerInfo] {
        &self.layers
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TilePick {
        let layer = rng.gen_range(0..self.layers.len());
        let info = &self.layers[layer];
        let x = rng.gen_range(0..info.x_tiles);
        let y = rng.gen_range(0..info.y_tiles);
        TilePick {
            layer: layer as u32,
            x,
            y,
            tile: tile_index(x, y, info).expect("sampled inside grid"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn picks_stay_in_grid_and_are_reproducible() {
        let docs = [
            LayerDoc { x_tiles: 1, y_tiles: 1, scale: 0.25 },
            LayerDoc { x_tiles: 3, y_tiles: 2, scale: 1.0 },
        ];
        let s = TileSampler::from_docs(&docs).unwrap();
        let mut a = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut b = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let p = s.sample(&mut a);
            assert_eq!(p, s.sample(&mut b));
            let l = &docs[p.layer as usize];
            assert!(p.x < l.x_tiles && p.y < l.y_tiles);
            assert_eq!(p.tile, p.y * l.x_tiles + p.x);
        }
    }

    #[test]
    fn empty_grids_rejected() {
        assert!(TileSampler::from_docs(&[]).is_none());
        let docs = [LayerDoc { x_tiles: 0, y_tiles: 1, scale: 1.0 }];
        assert!(TileSampler::from_docs(&docs).is_none());
    }
}
