//! Floor plan model: anchors, walls, obstacles and zones.
//!
//! A [`FloorPlan`] is the static description of the deployment area. It is
//! validated once at construction, after which queries (anchor lookup, zone
//! containment) cannot fail structurally.
//!
//! Zones may overlap and need not cover the whole plan; [`FloorPlan::zone_of`]
//! resolves containment with the boundary counted as inside and ties broken
//! towards the lowest zone id.

use crate::error::{Error, Result};
use crate::geometry::{point_in_polygon, polygon_centroid, polygon_is_simple, Point2};
use crate::real::Real;

/// Identifier of a fixed UWB anchor.
pub type AnchorId = u16;

/// Identifier of a zone of the floor plan.
pub type ZoneId = u16;

/// A fixed anchor with a known surveyed position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor<T> {
    /// Unique anchor id.
    pub id: AnchorId,
    /// Surveyed position in metres.
    pub position: Point2<T>,
}

/// A wall segment that delays signals crossing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall<T> {
    /// One endpoint of the wall.
    pub start: Point2<T>,
    /// The other endpoint of the wall.
    pub end: Point2<T>,
    /// Excess propagation delay added per crossing, in nanoseconds.
    pub delay_ns: T,
}

/// A polygonal obstacle that delays signals traversing its interior.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle<T> {
    /// Simple polygon outlining the obstacle (implicitly closed).
    pub boundary: Vec<Point2<T>>,
    /// Excess propagation delay added per interior traversal, in nanoseconds.
    pub delay_ns: T,
}

/// A named region of the floor plan used for pair-set selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Zone<T> {
    /// Unique zone id.
    pub id: ZoneId,
    /// Simple polygon outlining the zone (implicitly closed).
    pub boundary: Vec<Point2<T>>,
}

/// Validated static description of the deployment area.
#[derive(Debug, Clone, PartialEq)]
pub struct FloorPlan<T> {
    anchors: Vec<Anchor<T>>,
    walls: Vec<Wall<T>>,
    obstacles: Vec<Obstacle<T>>,
    zones: Vec<Zone<T>>,
}

impl<T: Real> FloorPlan<T> {
    /// Validates and assembles a floor plan.
    ///
    /// Requirements: at least two anchors with unique ids and finite
    /// positions; finite walls of positive length with non-negative delays;
    /// obstacle and zone boundaries that are simple polygons with at least
    /// three finite vertices; non-negative obstacle delays; unique zone ids.
    /// Anchors and zones are stored sorted by id.
    pub fn new(
        mut anchors: Vec<Anchor<T>>,
        walls: Vec<Wall<T>>,
        obstacles: Vec<Obstacle<T>>,
        mut zones: Vec<Zone<T>>,
    ) -> Result<Self> {
        if anchors.len() < 2 {
            return Err(Error::InvalidPlan(format!(
                "need at least 2 anchors, got {}",
                anchors.len()
            )));
        }
        anchors.sort_by_key(|a| a.id);
        for pair in anchors.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::InvalidPlan(format!(
                    "duplicate anchor id {}",
                    pair[0].id
                )));
            }
        }
        for anchor in &anchors {
            if !anchor.position.is_finite() {
                return Err(Error::InvalidPlan(format!(
                    "anchor {} has a non-finite position",
                    anchor.id
                )));
            }
        }

        for (i, wall) in walls.iter().enumerate() {
            if !wall.start.is_finite() || !wall.end.is_finite() || !wall.delay_ns.is_finite() {
                return Err(Error::InvalidPlan(format!("wall {i} has non-finite data")));
            }
            if wall.delay_ns < T::zero() {
                return Err(Error::InvalidPlan(format!("wall {i} has a negative delay")));
            }
            if wall.start.distance(&wall.end) <= T::lit(crate::geometry::BOUNDARY_TOL) {
                return Err(Error::InvalidPlan(format!("wall {i} has zero length")));
            }
        }

        for (i, obstacle) in obstacles.iter().enumerate() {
            validate_polygon(&obstacle.boundary, &format!("obstacle {i}"))?;
            if !obstacle.delay_ns.is_finite() || obstacle.delay_ns < T::zero() {
                return Err(Error::InvalidPlan(format!(
                    "obstacle {i} has an invalid delay"
                )));
            }
        }

        zones.sort_by_key(|z| z.id);
        for pair in zones.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::InvalidPlan(format!(
                    "duplicate zone id {}",
                    pair[0].id
                )));
            }
        }
        for zone in &zones {
            validate_polygon(&zone.boundary, &format!("zone {}", zone.id))?;
        }

        Ok(Self {
            anchors,
            walls,
            obstacles,
            zones,
        })
    }

    /// All anchors, sorted by id.
    pub fn anchors(&self) -> &[Anchor<T>] {
        &self.anchors
    }

    /// All walls, in declaration order.
    pub fn walls(&self) -> &[Wall<T>] {
        &self.walls
    }

    /// All obstacles, in declaration order.
    pub fn obstacles(&self) -> &[Obstacle<T>] {
        &self.obstacles
    }

    /// All zones, sorted by id.
    pub fn zones(&self) -> &[Zone<T>] {
        &self.zones
    }

    /// Looks up an anchor by id.
    pub fn anchor(&self, id: AnchorId) -> Option<&Anchor<T>> {
        self.anchors
            .binary_search_by_key(&id, |a| a.id)
            .ok()
            .map(|i| &self.anchors[i])
    }

    /// Looks up a zone by id.
    pub fn zone(&self, id: ZoneId) -> Option<&Zone<T>> {
        self.zones
            .binary_search_by_key(&id, |z| z.id)
            .ok()
            .map(|i| &self.zones[i])
    }

    /// Resolves which zone contains `point`.
    ///
    /// Boundaries count as inside; when several zones contain the point the
    /// lowest zone id wins; `None` when no zone contains it.
    pub fn zone_of(&self, point: Point2<T>) -> Option<ZoneId> {
        self.zones
            .iter()
            .find(|z| point_in_polygon(point, &z.boundary))
            .map(|z| z.id)
    }

    /// Area centroid of a zone's boundary polygon.
    pub fn zone_centroid(&self, id: ZoneId) -> Option<Point2<T>> {
        self.zone(id).map(|z| polygon_centroid(&z.boundary))
    }
}

/// Looks up an anchor position in a slice of anchors.
pub fn anchor_position<T: Real>(anchors: &[Anchor<T>], id: AnchorId) -> Option<Point2<T>> {
    anchors.iter().find(|a| a.id == id).map(|a| a.position)
}

fn validate_polygon<T: Real>(boundary: &[Point2<T>], what: &str) -> Result<()> {
    if boundary.len() < 3 {
        return Err(Error::InvalidPlan(format!(
            "{what} has {} vertices, need at least 3",
            boundary.len()
        )));
    }
    if boundary.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidPlan(format!(
            "{what} has a non-finite vertex"
        )));
    }
    if !polygon_is_simple(boundary) {
        return Err(Error::InvalidPlan(format!(
            "{what} is not a simple polygon"
        )));
    }
    Ok(())
}
