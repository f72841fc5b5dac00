//! Color filtering and largest-cluster extraction of the end-effector.

use serde::{Deserialize, Serialize};

use crate::cloud::{PointCloud, SpatialIndex};
use crate::error::{Error, Result};

/// HSV acceptance window. The hue interval wraps through 0° when
/// `hue_min > hue_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColorFilter {
    pub hue_min: f64,
    pub hue_max: f64,
    pub saturation_min: f64,
    pub value_min: f64,
}

impl Default for ColorFilter {
    /// Green: hue 90°-150°, s ≥ 0.5, v ≥ 0.2.
    fn default() -> Self {
        Self {
            hue_min: 90.0,
            hue_max: 150.0,
            saturation_min: 0.5,
            value_min: 0.2,
        }
    }
}

impl ColorFilter {
    pub fn validate(&self) -> Result<()> {
        for (name, h) in [("hue_min", self.hue_min), ("hue_max", self.hue_max)] {
            if !(0.0..360.0).contains(&h) {
                return Err(Error::param(name, format!("{h} outside [0, 360)")));
            }
        }
        for (name, v) in [("saturation_min", self.saturation_min), ("value_min", self.value_min)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, format!("{v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn accepts_hsv(&self, (h, s, v): (f64, f64, f64)) -> bool {
        let hue_ok = if self.hue_min <= self.hue_max {
            h >= self.hue_min && h <= self.hue_max
        } else {
            h >= self.hue_min || h <= self.hue_max
        };
        hue_ok && s >= self.saturation_min && v >= self.value_min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterParams {
    /// Two points are linked when at most this far apart (meters).
    pub link_radius: f64,
    pub min_cluster_size: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            link_radius: 0.01,
            min_cluster_size: 50,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.link_radius > 0.0 && self.link_radius.is_finite()) {
            return Err(Error::param("link_radius", "must be positive"));
        }
        if self.min_cluster_size == 0 {
            return Err(Error::param("min_cluster_size", "must be at least 1"));
        }
        Ok(())
    }
}

/// Hexcone RGB to HSV. Hue in degrees `[0, 360)`, zero when saturation is zero.
pub fn rgb_to_hsv(rgb: [f64; 3]) -> Result<(f64, f64, f64)> {
    if rgb.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(Error::param("rgb", format!("{rgb:?} outside [0, 1]")));
    }
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    if delta == 0.0 || s == 0.0 {
        return Ok((0.0, s, v));
    }
    let h = if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    Ok((h.rem_euclid(360.0), s, v))
}

/// Ids of the points whose color passes `filter`, ascending.
pub fn color_mask(cloud: &PointCloud, filter: &ColorFilter) -> Result<Vec<usize>> {
    let colors = cloud.colors().ok_or(Error::MissingColors)?;
    let mut ids = Vec::new();
    for (i, c) in colors.iter().enumerate() {
        if filter.accepts_hsv(rgb_to_hsv(*c)?) {
            ids.push(i);
        }
    }
    Ok(ids)
}

pub fn filter_by_color(cloud: &PointCloud, filter: &ColorFilter) -> Result<PointCloud> {
    Ok(cloud.select(&color_mask(cloud, filter)?))
}

struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// Connected components of the graph linking points at most
/// `link_radius` apart. Components below `min_cluster_size` are dropped.
/// Sorted by size descending, ties by smallest member id; members ascend.
pub fn euclidean_clusters(cloud: &PointCloud, params: &ClusterParams) -> Result<Vec<Vec<usize>>> {
    params.validate()?;
    let n = cloud.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let index = SpatialIndex::new(cloud.positions());
    let mut sets = DisjointSet::new(n);
    let mut buf = Vec::new();
    for (i, p) in cloud.positions().iter().enumerate() {
        index.radius_into(p, params.link_radius, &mut buf);
        for nb in &buf {
            if nb.id > i {
                sets.union(i, nb.id);
            }
        }
    }
    let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = sets.find(i);
        by_root[r].push(i);
    }
    let mut clusters: Vec<Vec<usize>> = by_root
        .into_iter()
        .filter(|c| !c.is_empty() && c.len() >= params.min_cluster_size)
        .collect();
    clusters.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    Ok(clusters)
}

/// Ids (into `cloud`) of the largest color-matching cluster, ascending.
pub fn extract_end_effector_ids(
    cloud: &PointCloud,
    filter: &ColorFilter,
    params: &ClusterParams,
) -> Result<Vec<usize>> {
    let mask = color_mask(cloud, filter)?;
    if mask.is_empty() {
        return Ok(Vec::new());
    }
    let colored = cloud.select(&mask);
    let clusters = euclidean_clusters(&colored, params)?;
    Ok(clusters
        .into_iter()
        .next()
        .map(|c| c.into_iter().map(|i| mask[i]).collect())
        .unwrap_or_default())
}

pub fn extract_end_effector(
    cloud: &PointCloud,
    filter: &ColorFilter,
    params: &ClusterParams,
) -> Result<PointCloud> {
    Ok(cloud.select(&extract_end_effector_ids(cloud, filter, params)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const GREEN: [f64; 3] = [0.1, 0.8, 0.2];
    const GRAY: [f64; 3] = [0.5, 0.5, 0.5];

    fn blob(rng: &mut impl Rng, center: Vec3, n: usize, spread: f64) -> Vec<Vec3> {
        (0..n)
            .map(|_| {
                center
                    + Vec3::new(
                        rng.random_range(-spread..spread),
                        rng.random_range(-spread..spread),
                        rng.random_range(-spread..spread),
                    )
            })
            .collect()
    }

    fn colored(points: Vec<Vec3>, color: [f64; 3]) -> PointCloud {
        let n = points.len();
        PointCloud::new(points).with_colors(vec![color; n]).unwrap()
    }

    #[test]
    fn hsv_examples() {
        assert_eq!(rgb_to_hsv([1.0, 0.0, 0.0]).unwrap(), (0.0, 1.0, 1.0));
        assert_eq!(rgb_to_hsv([0.0, 1.0, 0.0]).unwrap(), (120.0, 1.0, 1.0));
        assert_eq!(rgb_to_hsv([0.5, 0.5, 0.5]).unwrap(), (0.0, 0.0, 0.5));
        assert_eq!(rgb_to_hsv([0.0, 0.0, 1.0]).unwrap().0, 240.0);
        assert_eq!(rgb_to_hsv([1.0, 0.0, 1.0]).unwrap().0, 300.0);
        assert_eq!(rgb_to_hsv([0.0, 0.0, 0.0]).unwrap(), (0.0, 0.0, 0.0));
        assert!(rgb_to_hsv([1.2, 0.0, 0.0]).is_err());
        assert!(rgb_to_hsv([-0.1, 0.0, 0.0]).is_err());
    }

    #[test]
    fn hue_wraps() {
        let red = ColorFilter {
            hue_min: 340.0,
            hue_max: 20.0,
            saturation_min: 0.5,
            value_min: 0.2,
        };
        assert!(red.accepts_hsv(rgb_to_hsv([1.0, 0.0, 0.0]).unwrap()));
        assert!(red.accepts_hsv(rgb_to_hsv([1.0, 0.0, 0.2]).unwrap()));
        assert!(!red.accepts_hsv(rgb_to_hsv([0.0, 1.0, 0.0]).unwrap()));
    }

    #[test]
    fn filter_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let red = colored(blob(&mut rng, Vec3::zeros(), 50, 0.1), [1.0, 0.0, 0.0]);
        assert!(filter_by_color(&red, &ColorFilter::default()).unwrap().is_empty());
        let green = colored(blob(&mut rng, Vec3::zeros(), 50, 0.1), GREEN);
        assert_eq!(filter_by_color(&green, &ColorFilter::default()).unwrap(), green);
        let bare = PointCloud::new(vec![Vec3::zeros()]);
        assert!(matches!(filter_by_color(&bare, &ColorFilter::default()), Err(Error::MissingColors)));
    }

    #[test]
    fn filter_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts = blob(&mut rng, Vec3::zeros(), 300, 0.1);
        let colors = (0..300)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let cloud = PointCloud::new(pts).with_colors(colors).unwrap();
        let f = ColorFilter::default();
        let once = filter_by_color(&cloud, &f).unwrap();
        assert!(!once.is_empty());
        assert_eq!(filter_by_color(&once, &f).unwrap(), once);
    }

    #[test]
    fn cluster_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pts = blob(&mut rng, Vec3::zeros(), 100, 0.02);
        pts.extend(blob(&mut rng, Vec3::new(1.0, 0.0, 0.0), 100, 0.02));
        let cloud = PointCloud::new(pts);
        let tight = ClusterParams {
            link_radius: 0.05,
            min_cluster_size: 1,
        };
        let c = euclidean_clusters(&cloud, &tight).unwrap();
        assert_eq!(c.iter().map(Vec::len).collect::<Vec<_>>(), vec![100, 100]);
        assert_eq!(c[0][0], 0);
        assert_eq!(c[1][0], 100);
        let loose = ClusterParams {
            link_radius: 2.0,
            min_cluster_size: 1,
        };
        assert_eq!(euclidean_clusters(&cloud, &loose).unwrap().len(), 1);
    }

    #[test]
    fn cluster_min_size_drops_strays() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut pts = blob(&mut rng, Vec3::zeros(), 100, 0.02);
        pts.push(Vec3::new(5.0, 0.0, 0.0));
        pts.push(Vec3::new(0.0, 5.0, 0.0));
        pts.push(Vec3::new(0.0, 0.0, 5.0));
        let p = ClusterParams {
            link_radius: 0.05,
            min_cluster_size: 10,
        };
        let c = euclidean_clusters(&PointCloud::new(pts), &p).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].len(), 100);
        assert!(euclidean_clusters(&PointCloud::default(), &p).unwrap().is_empty());
    }

    #[test]
    fn clusters_partition_and_are_chained() {
        // BFS oracle over the explicit radius graph on a small cloud.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pts: Vec<Vec3> = (0..150)
            .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()) * 0.5)
            .collect();
        let cloud = PointCloud::new(pts.clone());
        let p = ClusterParams {
            link_radius: 0.08,
            min_cluster_size: 1,
        };
        let clusters = euclidean_clusters(&cloud, &p).unwrap();
        let mut seen = vec![false; pts.len()];
        for c in &clusters {
            for &i in c {
                assert!(!seen[i]);
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|s| *s));
        for c in &clusters {
            let mut reached = vec![false; pts.len()];
            let mut queue = vec![c[0]];
            reached[c[0]] = true;
            while let Some(i) = queue.pop() {
                for j in 0..pts.len() {
                    if !reached[j] && (pts[i] - pts[j]).norm() <= p.link_radius {
                        reached[j] = true;
                        queue.push(j);
                    }
                }
            }
            let component: Vec<usize> = (0..pts.len()).filter(|&i| reached[i]).collect();
            assert_eq!(&component, c);
        }
    }

    #[test]
    fn extract_picks_largest_green_cluster() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let gripper = colored(blob(&mut rng, Vec3::zeros(), 5000, 0.05), GREEN);
        let speck = colored(blob(&mut rng, Vec3::new(0.5, 0.0, 0.0), 20, 0.003), GREEN);
        let clutter = colored(blob(&mut rng, Vec3::new(0.0, 0.3, 0.0), 2000, 0.1), GRAY);
        let scene = crate::cloud::merge(&[gripper.clone(), speck, clutter]).unwrap();
        let p = ClusterParams {
            link_radius: 0.01,
            min_cluster_size: 50,
        };
        let ids = extract_end_effector_ids(&scene, &ColorFilter::default(), &p).unwrap();
        assert_eq!(ids, (0..5000).collect::<Vec<_>>());

        let gray_only = colored(blob(&mut rng, Vec3::zeros(), 100, 0.05), GRAY);
        assert!(extract_end_effector(&gray_only, &ColorFilter::default(), &p).unwrap().is_empty());
    }
}
