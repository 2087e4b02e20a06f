//! Domains, their lattice rasters, hyperplane reflections and the reflection atlas.

mod atlas;
mod grid;
mod mask;
mod shape;

pub use atlas::{atlas_directions, reflection_atlas, AtlasConfig, AtlasPlane, ReflectionAtlas};
pub use grid::{BoundaryPoint, DomainGrid, DomainSpec, Link, MIN_NODES, THETA_MIN};
pub use mask::{
    interior_reflection_test, rasterize, reflect_mask, reflect_points, Hyperplane, Mask, SmallerSide,
    CONTAINMENT_SLACK,
};
pub use shape::{DomainKind, Point};

pub(crate) use shape::{dist, norm};
