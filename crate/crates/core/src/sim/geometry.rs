//! Planar coverage region with a geodetic anchor.

/// Mean Earth radius, metres.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// East/north offset in metres from the region's south-west corner.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Closed axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Rect { x_min, y_min, x_max, y_max }
    }

    pub fn contains(&self, p: &Point) -> bool {
        (self.x_min..=self.x_max).contains(&p.x) && (self.y_min..=self.y_max).contains(&p.y)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.width() > 0.0 && self.height() > 0.0)
    }

    /// True when the interiors intersect; shared edges do not count.
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x_min < other.x_max && other.x_min < self.x_max && self.y_min < other.y_max && other.y_min < self.y_max
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x_min >= self.x_min && other.x_max <= self.x_max && other.y_min >= self.y_min && other.y_max <= self.y_max
    }

    /// Fold a point moving freely back into the rectangle, as if it bounced
    /// off the edges.
    pub fn reflect(&self, p: Point) -> Point {
        Point::new(reflect_axis(p.x, self.x_min, self.x_max), reflect_axis(p.y, self.y_min, self.y_max))
    }
}

fn reflect_axis(v: f64, lo: f64, hi: f64) -> f64 {
    let span = hi - lo;
    if span <= 0.0 {
        return lo;
    }
    let t = (v - lo).rem_euclid(2.0 * span);
    let folded = if t <= span { lo + t } else { hi - (t - span) };
    folded.clamp(lo, hi)
}

/// Equirectangular mapping between the planar region and latitude/longitude,
/// accurate over the few tens of kilometres a cell grid spans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoAnchor {
    pub lat: f64,
    pub lon: f64,
}

impl GeoAnchor {
    pub fn new(lat: f64, lon: f64) -> Self {
        GeoAnchor { lat, lon }
    }

    pub fn to_geodetic(&self, p: &Point) -> (f64, f64) {
        let lat = self.lat + (p.y / EARTH_RADIUS_M).to_degrees();
        let lon = self.lon + (p.x / (EARTH_RADIUS_M * self.lat.to_radians().cos())).to_degrees();
        (lat, wrap_lon(lon))
    }

    pub fn to_planar(&self, lat: f64, lon: f64) -> Point {
        let dlon = wrap_lon(lon - self.lon);
        Point::new(
            dlon.to_radians() * EARTH_RADIUS_M * self.lat.to_radians().cos(),
            (lat - self.lat).to_radians() * EARTH_RADIUS_M,
        )
    }
}

fn wrap_lon(lon: f64) -> f64 {
    if (-180.0..180.0).contains(&lon) {
        return lon;
    }
    let l = (lon + 180.0).rem_euclid(360.0) - 180.0;
    if l >= 180.0 {
        l - 360.0
    } else {
        l
    }
}
