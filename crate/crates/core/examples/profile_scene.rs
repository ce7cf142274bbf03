use std::time::Instant;
use skytrace_core::channel::Antennas;
use skytrace_core::geometry::{build_accelerator, load_scene};
use skytrace_core::mobility::*;
use skytrace_core::orchestrator::*;
use skytrace_core::raytracer::*;

fn main() {
    let scene_path = std::path::Path::new("/tmp/scn/scene.json");
    let routes_path = std::path::Path::new("/tmp/scn/routes.json");
    let base = load_scene(scene_path).unwrap();
    let routes = ingest_routes(routes_path).unwrap();
    let cfg = RunConfig {
        scene_path: scene_path.into(),
        routes_path: routes_path.into(),
        ..RunConfig::default()
    };
    let tcfg = cfg.trace_config();
    let models = assign_models(10, &builtin_models(), 1);

    // Build one scene with bodies at altitude 100
    let mut scene = base.clone();
    let mut ranges = vec![];
    for i in 0..10usize {
        let route = &routes[i % routes.len()];
        let samples = sample_trajectory_from(route, 0.1, 0.0, (i / routes.len()) as f64 * 25.0).unwrap();
        let p = place_uav(i as u32, &samples[0], &models[i], 100.0).unwrap();
        let mat = scene.material_id(&p.material_id).unwrap();
        let r = scene.append_triangles(&p.body_triangles(), mat).unwrap();
        ranges.push((p, r));
    }
    println!("faces: {}", scene.faces.len());

    let t = Instant::now();
    let bvh = build_accelerator(&scene);
    println!("bvh build: {:?}", t.elapsed());

    let t = Instant::now();
    let edges = scene_edges(&scene);
    println!("edges ({}): {:?}", edges.edges.len(), t.elapsed());

    let t = Instant::now();
    let tiles = build_tiles(&scene, 1.0);
    println!("tiles ({}): {:?}", tiles.tiles.len(), t.elapsed());

    let t = Instant::now();
    let illum = compute_tx_illumination(&scene, &bvh, &tiles, cfg.tx_position, &tcfg);
    let nrefl: usize = illum.reflected.values().map(|v| v.len()).sum();
    println!("tx illum (direct {} / refl {}): {:?}",
        illum.direct.iter().filter(|&&b| b).count(), nrefl, t.elapsed());

    let t = Instant::now();
    let cands = specular_candidates(&scene, &bvh, cfg.tx_position, &tcfg).unwrap();
    println!("sbr candidates ({}): {:?}", cands.len(), t.elapsed());

    let ant = Antennas::vertical_dipoles();
    let t = Instant::now();
    for (p, r) in &ranges {
        let opts = TraceOpts { rx_exclude: Some(r.clone()) };
        let t2 = Instant::now();
        let spec = trace_specular_with_candidates(&scene, &bvh, &cands, cfg.tx_position, p.rx_position, &tcfg, &opts).unwrap();
        let d_spec = t2.elapsed();
        let t2 = Instant::now();
        let diff = trace_diffraction_prepared(&bvh, &edges, cfg.tx_position, p.rx_position, &tcfg, &opts).unwrap();
        let d_diff = t2.elapsed();
        let t2 = Instant::now();
        let dsc = trace_diffuse_prepared(&scene, &bvh, &tiles, &illum, cfg.tx_position, p.rx_position, &tcfg, &opts).unwrap();
        let d_dsc = t2.elapsed();
        let t2 = Instant::now();
        let mut n = 0;
        for path in spec.iter().chain(diff.iter()).chain(dsc.iter()) {
            if skytrace_core::channel::path_metrics(path, &scene, &ant, &tcfg).unwrap().is_some() { n += 1; }
        }
        println!("  rx {}: spec {} ({:?}), diff {} ({:?}), diffuse {} ({:?}), metrics {} ({:?})",
            p.uav_id, spec.len(), d_spec, diff.len(), d_diff, dsc.len(), d_dsc, n, t2.elapsed());
    }
    println!("receivers total: {:?}", t.elapsed());
}
