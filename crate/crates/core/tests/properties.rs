//! Property tests over geometry, point clouds, segmentation and sampling.

use gripper_label::cloud::{merge, voxel_downsample, PointCloud, SpatialIndex};
use gripper_label::geometry::{rotation_geodesic, CameraModel};
use gripper_label::mesh::{gripper_mesh, sample_uniform, TriangleMesh};
use gripper_label::registration::{kabsch, residual};
use gripper_label::segmentation::{
    euclidean_clusters, extract_end_effector_ids, filter_by_color, ClusterParams, ColorFilter,
};
use gripper_label::{RigidTransform, Vec3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vec3(range: f64) -> impl Strategy<Value = Vec3> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn pose() -> impl Strategy<Value = RigidTransform> {
    (vec3(1.0), 0.0..std::f64::consts::PI, vec3(5.0)).prop_filter_map("zero axis", |(axis, angle, t)| {
        (axis.norm() > 1e-3).then(|| RigidTransform::from_axis_angle(axis.normalize(), angle).with_translation(t))
    })
}

fn camera() -> impl Strategy<Value = CameraModel> {
    (50.0..800.0f64, 50.0..800.0f64, 32usize..640, 32usize..480, pose()).prop_map(|(fx, fy, w, h, ext)| {
        CameraModel::new(fx, fy, w as f64 / 2.0, h as f64 / 2.0, w, h, ext).unwrap()
    })
}

fn colored_cloud(max: usize) -> impl Strategy<Value = PointCloud> {
    prop::collection::vec((vec3(1.0), (0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64)), 0..max).prop_map(|v| {
        let (pts, cols): (Vec<_>, Vec<_>) = v.into_iter().map(|(p, (r, g, b))| (p, [r, g, b])).unzip();
        PointCloud::new(pts).with_colors(cols).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn backproject_then_project_recovers_pixel(
        cam in camera(),
        fu in 0.0..1.0f64,
        fv in 0.0..1.0f64,
        d in 0.05..20.0f64,
    ) {
        let (u, v) = (fu * (cam.width - 1) as f64, fv * (cam.height - 1) as f64);
        let p = cam.backproject_pixel(u, v, d).unwrap();
        let (u2, v2, d2) = cam.project(&p).unwrap();
        prop_assert!((u2 - u).abs() < 1e-6 && (v2 - v).abs() < 1e-6 && (d2 - d).abs() < 1e-6);
    }

    #[test]
    fn compose_applies_right_to_left(a in pose(), b in pose(), p in vec3(3.0)) {
        let lhs = a.compose(&b).apply(&p);
        let rhs = a.apply(&b.apply(&p));
        prop_assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn inverse_undoes_apply(a in pose(), p in vec3(3.0)) {
        prop_assert!((a.inverse().apply(&a.apply(&p)) - p).norm() < 1e-9);
    }

    #[test]
    fn quaternion_round_trip(a in pose()) {
        let j = a.to_json();
        prop_assert!(j.q[0] >= 0.0);
        let b = RigidTransform::try_from(j).unwrap();
        prop_assert!(rotation_geodesic(&a, &b) < 1e-9);
        prop_assert!((a.translation() - b.translation()).norm() < 1e-12);
    }

    #[test]
    fn geodesic_is_a_metric(a in pose(), b in pose(), c in pose()) {
        let ab = rotation_geodesic(&a, &b);
        prop_assert!((ab - rotation_geodesic(&b, &a)).abs() < 1e-9);
        prop_assert!((0.0..=std::f64::consts::PI + 1e-12).contains(&ab));
        prop_assert!(ab <= rotation_geodesic(&a, &c) + rotation_geodesic(&c, &b) + 1e-9);
    }

    #[test]
    fn kabsch_residual_invariant_to_global_transform(
        a in pose(),
        pts in prop::collection::vec((vec3(1.0), vec3(0.01)), 4..30),
    ) {
        let src: Vec<Vec3> = pts.iter().map(|(p, _)| *p).collect();
        let dst: Vec<Vec3> = pts.iter().map(|(p, n)| p + n).collect();
        let Ok(t) = kabsch(&src, &dst) else { return Ok(()) };
        let src_a: Vec<Vec3> = src.iter().map(|p| a.apply(p)).collect();
        let dst_a: Vec<Vec3> = dst.iter().map(|p| a.apply(p)).collect();
        let t_a = kabsch(&src_a, &dst_a).unwrap();
        prop_assert!((residual(&t, &src, &dst) - residual(&t_a, &src_a, &dst_a)).abs() < 1e-9);
    }

    #[test]
    fn merge_is_associative_and_keeps_every_point(
        a in colored_cloud(40),
        b in colored_cloud(40),
        c in colored_cloud(40),
    ) {
        let left = merge(&[merge(&[a.clone(), b.clone()]).unwrap(), c.clone()]).unwrap();
        let right = merge(&[a.clone(), merge(&[b.clone(), c.clone()]).unwrap()]).unwrap();
        prop_assert_eq!(left.len(), a.len() + b.len() + c.len());
        prop_assert_eq!(left.positions(), right.positions());
        if !left.is_empty() {
            let mass = |x: &PointCloud| x.colors().map_or(0.0, |c| c.iter().map(|c| c[0] + c[1] + c[2]).sum::<f64>());
            prop_assert!((mass(&left) - (mass(&a) + mass(&b) + mass(&c))).abs() < 1e-9);
        }
    }

    #[test]
    fn voxel_downsample_shrinks_and_settles(cloud in colored_cloud(300), voxel in 0.05..0.5f64) {
        prop_assume!(!cloud.is_empty());
        let once = voxel_downsample(&cloud, voxel).unwrap();
        prop_assert!(once.len() <= cloud.len());
        // one point per voxel: running again changes nothing
        let key = |p: &Vec3| (p / voxel).map(f64::floor);
        let mut keys: Vec<_> = once.positions().iter().map(|p| { let k = key(p); (k.x as i64, k.y as i64, k.z as i64) }).collect();
        keys.sort_unstable();
        keys.dedup();
        if keys.len() == once.len() {
            let twice = voxel_downsample(&once, voxel).unwrap();
            prop_assert_eq!(twice.len(), once.len());
        }
    }

    #[test]
    fn color_filter_is_idempotent_and_extraction_is_a_subset(cloud in colored_cloud(200)) {
        let f = ColorFilter { hue_min: 0.0, hue_max: 180.0, saturation_min: 0.3, value_min: 0.2 };
        let once = filter_by_color(&cloud, &f).unwrap();
        let twice = filter_by_color(&once, &f).unwrap();
        prop_assert_eq!(once.positions(), twice.positions());
        let params = ClusterParams { link_radius: 0.3, min_cluster_size: 1 };
        let ids = extract_end_effector_ids(&cloud, &f, &params).unwrap();
        for p in cloud.select(&ids).positions() {
            prop_assert!(once.positions().contains(p));
        }
    }
}

#[test]
fn spatial_index_matches_brute_force_on_random_clouds() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..100 {
        let n = rng.random_range(1..400);
        let pts: Vec<Vec3> = (0..n)
            .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let index = SpatialIndex::new(&pts);
        for _ in 0..10 {
            let q = Vec3::new(rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2));
            let mut all: Vec<(f64, usize)> = pts.iter().enumerate().map(|(i, p)| ((p - q).norm_squared(), i)).collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

            let k = rng.random_range(1..20);
            let knn: Vec<usize> = index.knn(&q, k).iter().map(|n| n.id).collect();
            let expect: Vec<usize> = all.iter().take(k).map(|x| x.1).collect();
            assert_eq!(knn, expect, "trial {trial} knn");

            let r = rng.random_range(0.05..0.8);
            let mut got: Vec<usize> = index.radius(&q, r).iter().map(|n| n.id).collect();
            got.sort_unstable();
            let mut want: Vec<usize> = all.iter().filter(|x| x.0 <= r * r).map(|x| x.1).collect();
            want.sort_unstable();
            assert_eq!(got, want, "trial {trial} radius");
        }
    }
}

#[test]
fn clusters_partition_and_members_are_chained() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let n = rng.random_range(5..120);
        let pts: Vec<Vec3> = (0..n)
            .map(|_| Vec3::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..0.2)))
            .collect();
        let cloud = PointCloud::new(pts.clone());
        let tol = 0.12;
        let clusters = euclidean_clusters(&cloud, &ClusterParams { link_radius: tol, min_cluster_size: 1 }).unwrap();
        let mut seen = vec![false; n];
        for c in &clusters {
            for &i in c {
                assert!(!seen[i], "point {i} in two clusters");
                seen[i] = true;
            }
            // BFS inside the cluster reaches every member
            let mut reached = vec![c[0]];
            let mut frontier = vec![c[0]];
            while let Some(i) = frontier.pop() {
                for &j in c {
                    if !reached.contains(&j) && (pts[i] - pts[j]).norm() <= tol {
                        reached.push(j);
                        frontier.push(j);
                    }
                }
            }
            assert_eq!(reached.len(), c.len());
        }
        assert!(seen.iter().all(|s| *s), "clusters must cover every point");
        // no link between different clusters
        for (a, ca) in clusters.iter().enumerate() {
            for cb in &clusters[a + 1..] {
                for &i in ca {
                    for &j in cb {
                        assert!((pts[i] - pts[j]).norm() > tol);
                    }
                }
            }
        }
    }
}

#[test]
fn samples_lie_on_the_gripper_and_follow_the_seed() {
    let mesh = gripper_mesh();
    let a = sample_uniform(&mesh, 3000, 9).unwrap();
    let b = sample_uniform(&mesh, 3000, 9).unwrap();
    let c = sample_uniform(&mesh, 3000, 10).unwrap();
    assert_eq!(a.positions(), b.positions());
    assert_ne!(a.positions(), c.positions());
    for p in a.positions() {
        assert!(mesh.distance_to_surface(p) < 1e-9);
    }
}

#[test]
fn per_triangle_frequency_matches_area_chi_square() {
    let mesh = gripper_mesh();
    let n = 100_000;
    let (_, faces) = gripper_label::mesh::sample_uniform_with_faces(&mesh, n, 3).unwrap();
    let mut counts = vec![0usize; mesh.triangles().len()];
    faces.iter().for_each(|&f| counts[f] += 1);
    let area = mesh.surface_area();
    let chi2: f64 = counts
        .iter()
        .enumerate()
        .map(|(t, &c)| {
            let e = n as f64 * mesh.triangle_area(t) / area;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    // 79 degrees of freedom; the 99.9% quantile is about 124
    assert!(chi2 < 124.0, "chi-square {chi2}");
}

#[test]
fn gripper_fixture_counts_match_its_header() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/gripper.obj");
    let text = std::fs::read_to_string(&path).unwrap();
    let header = text.lines().next().unwrap();
    let numbers: Vec<usize> = header
        .split(|c: char| !c.is_ascii_digit())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().unwrap())
        .collect();
    let mesh: TriangleMesh = gripper_label::mesh::load_mesh(&path).unwrap();
    assert_eq!(numbers, vec![mesh.vertices().len(), mesh.triangles().len()]);
    assert_eq!(mesh, gripper_mesh());
}
