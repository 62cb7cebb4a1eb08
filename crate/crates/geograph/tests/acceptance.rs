//! End-to-end acceptance checks. Each test covers one guarantee the
//! toolkit ships with, prints a single PASS line with its runtime
//! (visible under --nocapture), and enforces a time budget.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use geograph::{
    betweenness, betweenness_with_threads, correlation_network, from_geojson, read_shapefile,
    write_shapefile, AttrValue, ConnectionMode, CoordMode, Feature, FeatureCollection, FieldDef,
    FieldKind, FieldSchema, GeoGraph, GeoPoint, Geometry, GeometryKind, ShapefileTriplet,
    Threshold, TimeSeriesSet,
};
use rand::prelude::*;

fn report(what: &str, started: Instant, budget: Duration) {
    let elapsed = started.elapsed();
    assert!(
        elapsed < budget,
        "{what}: took {elapsed:.2?}, budget {budget:.2?}"
    );
    println!("PASS {what} ({elapsed:.2?})");
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_geograph"))
}

fn run_ok(args: &[&str]) {
    let output = bin().args(args).output().expect("spawn geograph");
    assert!(
        output.status.success(),
        "geograph {args:?} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn betweenness_matches_exhaustive_enumeration() {
    let started = Instant::now();
    let mut rng = common::rng(101);
    for round in 0..100 {
        let n = rng.gen_range(2..=8);
        let g = common::random_graph(&mut rng, n, 0.4);
        for weighted in [false, true] {
            let got = betweenness(&g, false, weighted).unwrap();
            let want = common::oracle_betweenness(&g, weighted);
            for (id, expected) in &want {
                let actual = got.get(*id).unwrap();
                assert!(
                    (actual - expected).abs() <= 1e-9,
                    "round {round}, weighted {weighted}, node {id}: got {actual}, want {expected}"
                );
            }
        }
    }
    report(
        "betweenness equals exhaustive path enumeration (100 graphs, both modes)",
        started,
        Duration::from_secs(5),
    );
}

#[test]
fn connection_detection_matches_brute_force() {
    let started = Instant::now();
    let mut rng = common::rng(202);
    for round in 0..50 {
        let c = common::random_polyline_collection(&mut rng, 14);
        for tol in [0.0, 1e-6, 0.05] {
            for mode in [ConnectionMode::Geometric, ConnectionMode::Endpoint] {
                let index = geograph::build_spatial_index(&c, None).unwrap();
                let fast: BTreeSet<(usize, usize)> =
                    geograph::find_connections(&c, &index, tol, mode)
                        .unwrap()
                        .pairs()
                        .into_iter()
                        .collect();
                let slow = common::oracle_connections(&c, tol, mode);
                assert_eq!(
                    fast, slow,
                    "round {round}, tol {tol}, mode {mode:?}: indexed and brute-force differ"
                );
            }
        }
    }
    report(
        "connection detection equals all-pairs scan (50 collections, 3 tolerances, both modes)",
        started,
        Duration::from_secs(10),
    );
}

#[test]
fn shapefile_roundtrip_is_bit_exact_and_reference_readable() {
    let started = Instant::now();
    let mut rng = common::rng(303);
    let dir = tempfile::tempdir().unwrap();
    let mut total = 0usize;
    let mut batch = 0usize;
    while total < 1000 {
        let features = rng.gen_range(20..=80).min(1000 - total);
        let c = common::random_collection(&mut rng, features);
        total += features;
        batch += 1;
        let stem = dir.path().join(format!("batch{batch}"));
        write_shapefile(&c, &stem).unwrap();

        // Own reader: bit-exact geometry and attributes, no warnings.
        let triplet = ShapefileTriplet::read_from(&stem).unwrap();
        let (back, warnings) = read_shapefile(&triplet, CoordMode::Planar).unwrap();
        assert!(warnings.is_empty(), "unexpected warnings: {warnings:?}");
        assert_eq!(back.schema(), c.schema());
        assert_eq!(back.features().len(), c.features().len());
        for (a, b) in c.features().iter().zip(back.features()) {
            assert_eq!(a.geometry, b.geometry);
            assert_eq!(a.attributes, b.attributes);
        }

        // External reference reader sees the same records.
        let external = shapefile::read(stem.with_extension("shp")).unwrap();
        assert_eq!(external.len(), c.features().len());
        for ((shape, record), ours) in external.iter().zip(c.features()) {
            check_external_geometry(shape, &ours.geometry);
            for (field, value) in c.schema().fields().iter().zip(&ours.attributes) {
                check_external_value(record, &field.name, value);
            }
        }
    }
    assert_eq!(total, 1000);
    report(
        "shapefile write/read round trip is exact for 1000 features, reference reader agrees",
        started,
        Duration::from_secs(30),
    );
}

fn check_external_geometry(shape: &shapefile::Shape, ours: &Option<Geometry>) {
    match (shape, ours) {
        (shapefile::Shape::NullShape, None) => {}
        (shapefile::Shape::Point(p), Some(Geometry::Point(q))) => {
            assert_eq!((p.x, p.y), (q.x, q.y));
        }
        (shapefile::Shape::Polyline(line), Some(Geometry::PolyLine(poly))) => {
            assert_eq!(line.parts().len(), poly.parts().len());
            for (theirs, mine) in line.parts().iter().zip(poly.parts()) {
                assert_eq!(theirs.len(), mine.len());
                for (p, q) in theirs.iter().zip(mine) {
                    assert_eq!((p.x, p.y), (q.x, q.y));
                }
            }
        }
        (shape, ours) => panic!(
            "geometry mismatch: reference reader sees {}, we wrote {ours:?}",
            shape.shapetype()
        ),
    }
}

fn check_external_value(record: &shapefile::dbase::Record, name: &str, value: &AttrValue) {
    let field = record
        .get(name)
        .unwrap_or_else(|| panic!("reference reader lost field {name:?}"));
    match (value, field) {
        (AttrValue::Null, shapefile::dbase::FieldValue::Character(None)) => {}
        (AttrValue::Null, shapefile::dbase::FieldValue::Numeric(None)) => {}
        (AttrValue::Null, shapefile::dbase::FieldValue::Logical(None)) => {}
        (AttrValue::Integer(v), shapefile::dbase::FieldValue::Numeric(Some(x))) => {
            assert_eq!(*x, *v as f64);
        }
        (AttrValue::Real(v), shapefile::dbase::FieldValue::Numeric(Some(x))) => {
            assert_eq!(x, v);
        }
        (AttrValue::Text(v), shapefile::dbase::FieldValue::Character(Some(x))) => {
            assert_eq!(x, v);
        }
        (AttrValue::Logical(v), shapefile::dbase::FieldValue::Logical(Some(x))) => {
            assert_eq!(x, v);
        }
        other => panic!("field {name:?} mismatch: {other:?}"),
    }
}

/// A 5x5 grid of named streets plus a diagonal avenue touching every
/// one of them. The avenue connects to all ten grid streets, so it
/// carries a share of every same-orientation street pair and must rank
/// strictly first in betweenness.
fn grid_with_avenue_xml() -> String {
    let mut xml = String::from("<?xml version=\"1.0\"?>\n<osm version=\"0.6\">\n");
    for i in 0..5 {
        for j in 0..5 {
            xml.push_str(&format!(
                "<node id=\"{}\" lon=\"{}\" lat=\"{}\"/>\n",
                100 + 10 * i + j,
                i as f64 * 0.001,
                j as f64 * 0.001,
            ));
        }
    }
    let mut way = |id: i64, name: &str, refs: &[i64]| {
        xml.push_str(&format!("<way id=\"{id}\">"));
        for r in refs {
            xml.push_str(&format!("<nd ref=\"{r}\"/>"));
        }
        xml.push_str(&format!(
            "<tag k=\"highway\" v=\"residential\"/><tag k=\"name\" v=\"{name}\"/></way>\n"
        ));
    };
    for j in 0..5i64 {
        let refs: Vec<i64> = (0..5).map(|i| 100 + 10 * i + j).collect();
        way(200 + j, &format!("Rua H{j}"), &refs);
    }
    for i in 0..5i64 {
        let refs: Vec<i64> = (0..5).map(|j| 100 + 10 * i + j).collect();
        way(300 + i, &format!("Rua V{i}"), &refs);
    }
    let diagonal: Vec<i64> = (0..5).map(|i| 100 + 11 * i).collect();
    way(400, "Avenida Central", &diagonal);
    xml.push_str("</osm>\n");
    xml
}

#[test]
fn street_grid_avenue_ranks_first_in_betweenness() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let osm = dir.path().join("grid.osm");
    std::fs::write(&osm, grid_with_avenue_xml()).unwrap();

    let streets = dir.path().join("streets");
    run_ok(&[
        "osm2graph",
        "--in",
        osm.to_str().unwrap(),
        "--out",
        streets.to_str().unwrap(),
    ]);
    let ranked = dir.path().join("ranked");
    run_ok(&[
        "metrics",
        "--in",
        streets.with_extension("geojson").to_str().unwrap(),
        "--betweenness",
        "--out",
        ranked.to_str().unwrap(),
    ]);

    let text = std::fs::read_to_string(ranked.with_extension("geojson")).unwrap();
    let g = from_geojson(&text).unwrap();
    assert_eq!(g.node_count(), 11);

    let score_of = |node: &geograph::Node| match node.attributes.get("betweenness") {
        Some(AttrValue::Real(v)) => *v,
        other => panic!("missing betweenness attribute: {other:?}"),
    };
    let mut avenue = None;
    let mut best_street = f64::NEG_INFINITY;
    for (_, node) in g.nodes() {
        let score = score_of(node);
        // Street names are casefolded during aggregation.
        match node.attributes.get("name") {
            Some(AttrValue::Text(name)) if name.eq_ignore_ascii_case("Avenida Central") => {
                avenue = Some(score)
            }
            _ => best_street = best_street.max(score),
        }
    }
    let avenue = avenue.expect("avenue node present");
    assert!(
        avenue > best_street,
        "avenue {avenue} does not strictly beat best street {best_street}"
    );
    report(
        "street grid pipeline ranks the central avenue strictly first in betweenness",
        started,
        Duration::from_secs(2),
    );
}

#[test]
fn flow_threshold_network_matches_hand_enumeration() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let od = dir.path().join("trips.csv");
    let zones = dir.path().join("zones.csv");
    // Summed two-way flows: 1-2 = 1200, 1-3 = 1000 (boundary, excluded
    // by the strict comparison), 2-3 = 1100, 3-4 = 2000, 4-5 = 300,
    // 5-6 = 1001.
    std::fs::write(
        &od,
        "origin,dest,flow\n\
         1,2,600\n2,1,600\n\
         1,3,500\n3,1,500\n\
         2,3,800\n3,2,300\n\
         3,4,2000\n\
         4,5,100\n5,4,200\n\
         5,6,999\n6,5,2\n",
    )
    .unwrap();
    std::fs::write(
        &zones,
        "id,x,y\n1,0,0\n2,10,0\n3,20,0\n4,30,0\n5,40,0\n6,50,0\n",
    )
    .unwrap();

    let out = dir.path().join("mobility");
    run_ok(&[
        "flownet",
        "--od",
        od.to_str().unwrap(),
        "--zones",
        zones.to_str().unwrap(),
        "--tau",
        "1000",
        "--out",
        out.to_str().unwrap(),
    ]);

    let text = std::fs::read_to_string(out.with_extension("geojson")).unwrap();
    let g = from_geojson(&text).unwrap();
    let edges: BTreeSet<(i64, i64)> = g.edges().map(|(u, v, _)| (u, v)).collect();
    assert_eq!(
        edges,
        BTreeSet::from([(1, 2), (2, 3), (3, 4), (5, 6)]),
        "edge set differs from the hand enumeration"
    );
    for (u, v, e) in g.edges() {
        let expected = match (u, v) {
            (1, 2) => 1200.0,
            (2, 3) => 1100.0,
            (3, 4) => 2000.0,
            (5, 6) => 1001.0,
            _ => unreachable!(),
        };
        assert_eq!(e.weight, expected);
    }

    // Exported nodes carry a degree attribute equal to a recomputation
    // from the exported edges.
    let mut recomputed: BTreeMap<i64, f64> = g.node_ids().map(|id| (id, 0.0)).collect();
    for (u, v, _) in g.edges() {
        *recomputed.get_mut(&u).unwrap() += 1.0;
        *recomputed.get_mut(&v).unwrap() += 1.0;
    }
    for (id, node) in g.nodes() {
        assert_eq!(
            node.attributes.get("degree"),
            Some(&AttrValue::Real(recomputed[&id])),
            "node {id} degree attribute"
        );
    }

    // The nodes attribute table agrees as well.
    let triplet = ShapefileTriplet::read_from(&dir.path().join("mobility_nodes")).unwrap();
    let (nodes_layer, _) = read_shapefile(&triplet, CoordMode::Planar).unwrap();
    let id_at = nodes_layer.schema().position_of("node_id").unwrap();
    let degree_at = nodes_layer.schema().position_of("degree").unwrap();
    for feature in nodes_layer.features() {
        let id = feature.attributes[id_at].as_i64().unwrap();
        let got = feature.attributes[degree_at].as_f64().unwrap();
        assert_eq!(got, recomputed[&id], "zone {id} degree column");
    }
    report(
        "flow network at threshold 1000 matches the hand-enumerated edges and degrees",
        started,
        Duration::from_secs(1),
    );
}

#[test]
fn correlated_blocks_split_into_two_components() {
    let started = Instant::now();
    // Two blocks over eight samples. Block A series are positive
    // affine images of an odd-symmetric pattern, block B of an
    // even-symmetric one, so every cross-block covariance term cancels
    // exactly and within-block correlations are exactly 1.
    let odd: [f64; 8] = [-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0];
    let even: [f64; 8] = [7.0, 1.0, -3.0, -5.0, -5.0, -3.0, 1.0, 7.0];
    let affine = |base: &[f64; 8], scale: f64, shift: f64| -> Vec<Option<f64>> {
        base.iter().map(|v| Some(v * scale + shift)).collect()
    };
    let series = vec![
        affine(&odd, 1.0, 0.0),
        affine(&odd, 2.0, 5.0),
        affine(&odd, 0.5, -3.0),
        affine(&even, 1.0, 0.0),
        affine(&even, 3.0, 1.0),
        affine(&even, 0.25, 10.0),
    ];
    let ids = [1i64, 2, 3, 4, 5, 6];
    let locations: Vec<GeoPoint> = (0..6)
        .map(|i| GeoPoint::new(i as f64, 0.0).unwrap())
        .collect();

    // Verify the fixture's own claim with the direct formula before
    // trusting it: within-block r >= 0.95, cross-block |r| <= 0.2.
    for i in 0..6 {
        for j in (i + 1)..6 {
            let r = geograph::pearson(&series[i], &series[j], 2)
                .unwrap()
                .unwrap();
            if (i < 3) == (j < 3) {
                assert!(r >= 0.95, "within-block r({i},{j}) = {r}");
            } else {
                assert!(r.abs() <= 0.2, "cross-block r({i},{j}) = {r}");
            }
        }
    }

    let ts = TimeSeriesSet::new(
        ids.iter()
            .copied()
            .zip(locations)
            .zip(series)
            .map(|((id, at), s)| (id, at, s))
            .collect(),
    )
    .unwrap();
    let (g, diagnostics) = correlation_network(&ts, Threshold::new(0.5).unwrap(), None).unwrap();
    assert!(diagnostics.is_empty(), "{diagnostics:?}");

    let labels = common::components(&g);
    let distinct: BTreeSet<usize> = labels.values().copied().collect();
    assert_eq!(distinct.len(), 2, "expected exactly two components");
    let block_a: BTreeSet<usize> = [1i64, 2, 3].iter().map(|id| labels[id]).collect();
    let block_b: BTreeSet<usize> = [4i64, 5, 6].iter().map(|id| labels[id]).collect();
    assert_eq!(block_a.len(), 1, "block A splits");
    assert_eq!(block_b.len(), 1, "block B splits");
    assert_ne!(block_a, block_b);
    report(
        "correlation network at threshold 0.5 separates the two constructed blocks",
        started,
        Duration::from_secs(2),
    );
}

fn write_point_layer(stem: &Path, ids: &[i64], rng: &mut rand_chacha::ChaCha8Rng) {
    let schema = FieldSchema::new(vec![FieldDef::new("id", FieldKind::Integer, 10, 0)]).unwrap();
    let mut c = FeatureCollection::new(schema, GeometryKind::Point, CoordMode::Planar);
    for &id in ids {
        c.push(Feature {
            geometry: Some(Geometry::Point(
                GeoPoint::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)).unwrap(),
            )),
            attributes: vec![AttrValue::Integer(id)],
        })
        .unwrap();
    }
    write_shapefile(&c, stem).unwrap();
}

fn adjacency_csv(ids: &[i64], matrix: &[Vec<u8>]) -> String {
    let mut text = String::new();
    for id in ids {
        text.push(',');
        text.push_str(&id.to_string());
    }
    text.push('\n');
    for (r, row) in matrix.iter().enumerate() {
        text.push_str(&ids[r].to_string());
        for cell in row {
            text.push(',');
            text.push_str(&cell.to_string());
        }
        text.push('\n');
    }
    text
}

#[test]
fn adjacency_workflow_roundtrips_the_matrix_exactly() {
    let started = Instant::now();
    let mut rng = common::rng(707);
    let dir = tempfile::tempdir().unwrap();
    for round in 0..50 {
        let n = rng.gen_range(2..=30);
        // Distinct, non-contiguous ids exercise the id binding.
        let mut ids: Vec<i64> = (0..n as i64).map(|i| i * 7 + 1).collect();
        ids.shuffle(&mut rng);
        let mut picks = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < 0.3 {
                    picks.push((i, j));
                }
            }
        }
        let mut matrix = vec![vec![0u8; n]; n];
        for (i, j) in picks {
            matrix[i][j] = 1;
            matrix[j][i] = 1;
        }

        let points = dir.path().join(format!("points{round}"));
        write_point_layer(&points, &ids, &mut rng);
        let adj = dir.path().join(format!("adj{round}.csv"));
        std::fs::write(&adj, adjacency_csv(&ids, &matrix)).unwrap();

        let out = dir.path().join(format!("net{round}"));
        run_ok(&[
            "geocnet",
            "--points",
            points.to_str().unwrap(),
            "--adj",
            adj.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);

        // Rebuild the matrix from the emitted edge layer.
        let triplet = ShapefileTriplet::read_from(&dir.path().join(format!("net{round}_edges")))
            .unwrap();
        let (edges_layer, warnings) = read_shapefile(&triplet, CoordMode::Planar).unwrap();
        assert!(warnings.is_empty());
        let source_at = edges_layer.schema().position_of("source").unwrap();
        let target_at = edges_layer.schema().position_of("target").unwrap();
        let index_of: BTreeMap<i64, usize> =
            ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut rebuilt = vec![vec![0u8; n]; n];
        for feature in edges_layer.features() {
            let u = feature.attributes[source_at].as_i64().unwrap();
            let v = feature.attributes[target_at].as_i64().unwrap();
            rebuilt[index_of[&u]][index_of[&v]] = 1;
            rebuilt[index_of[&v]][index_of[&u]] = 1;
        }
        assert_eq!(rebuilt, matrix, "round {round}: adjacency differs");
    }
    report(
        "point layer + adjacency workflow reproduces the input matrix exactly (50 graphs)",
        started,
        Duration::from_secs(10),
    );
}

/// Random geometric graph: n points in the unit square, edges between
/// pairs within the radius, found with a cell grid.
fn random_geometric_graph(rng: &mut rand_chacha::ChaCha8Rng, n: usize, radius: f64) -> GeoGraph {
    let points: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
        .collect();
    let cols = (1.0 / radius).ceil() as i64;
    let cell_of = |x: f64, y: f64| ((x / radius) as i64, (y / radius) as i64);
    let mut grid: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, &(x, y)) in points.iter().enumerate() {
        grid.entry(cell_of(x, y)).or_default().push(i);
    }

    let mut g = GeoGraph::new();
    for (i, &(x, y)) in points.iter().enumerate() {
        g.add_node(i as i64, GeoPoint::new(x, y).unwrap(), BTreeMap::new());
    }
    let mut edges = 0usize;
    for (&(cx, cy), members) in &grid {
        for dx in 0..=1i64 {
            for dy in -1..=1i64 {
                if dx == 0 && dy < 0 {
                    continue;
                }
                let (nx, ny) = (cx + dx, cy + dy);
                if nx < 0 || ny < 0 || nx > cols || ny > cols {
                    continue;
                }
                let same = dx == 0 && dy == 0;
                let others = if same {
                    members.clone()
                } else {
                    grid.get(&(nx, ny)).cloned().unwrap_or_default()
                };
                for (a, &i) in members.iter().enumerate() {
                    let start = if same { a + 1 } else { 0 };
                    for &j in &others[start..] {
                        let (x1, y1) = points[i];
                        let (x2, y2) = points[j];
                        if (x1 - x2).hypot(y1 - y2) <= radius && i != j {
                            if g.edge(i as i64, j as i64).is_none() {
                                edges += 1;
                            }
                            g.add_edge(i as i64, j as i64, 1.0, BTreeMap::new()).unwrap();
                        }
                    }
                }
            }
        }
    }
    assert_eq!(edges, g.edge_count());
    g
}

#[test]
fn large_graph_betweenness_is_fast_and_worker_invariant() {
    let mut rng = common::rng(808);
    // Radius chosen for an expected pi * r^2 * n(n-1)/2 of about
    // thirty thousand edges on ten thousand nodes.
    let g = random_geometric_graph(&mut rng, 10_000, 0.0138);
    let edges = g.edge_count();
    assert!(
        (25_000..=35_000).contains(&edges),
        "geometric graph has {edges} edges, outside the intended band"
    );

    let started = Instant::now();
    let single = betweenness_with_threads(&g, false, false, 1).unwrap();
    report(
        &format!("single-worker betweenness on 10000 nodes / {edges} edges"),
        started,
        Duration::from_secs(60),
    );

    let multi = betweenness_with_threads(&g, false, false, 4).unwrap();
    for (id, a) in single.values() {
        let b = multi.values().get(id).unwrap();
        assert_eq!(
            a.to_bits(),
            b.to_bits(),
            "node {id}: single and multi-worker results differ bitwise"
        );
    }
    println!("PASS multi-worker betweenness is bitwise identical to single-worker");
}
