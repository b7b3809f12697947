//! Fuse stage: weight each clip's point cloud by every trigger's heatmap.

use crate::config::FuseConfig;
use crate::error::{input_err, run_stage, stage_err, CliResult};
use crate::layout::{check_rel_component, check_rel_path, FusedRecord, Layout, TriggerRecord};
use rayon::prelude::*;
use sonoscene_core::fusion::fuse;
use sonoscene_core::io::calib::read_camera;
use sonoscene_core::io::heatmap::read_heatmap;
use sonoscene_core::io::ply::{read_ply, write_weighted_ply};
use sonoscene_core::io::{read_jsonl, write_jsonl};
use sonoscene_core::PointCloud;
use std::collections::BTreeMap;
use std::path::Path;

pub fn run(cfg: &FuseConfig) -> CliResult<()> {
    let layout = Layout::new(&cfg.out);
    let camera = read_camera(&layout.acoustic_camera_json()).map_err(input_err)?;
    let triggers: Vec<TriggerRecord> =
        read_jsonl(&layout.triggers_jsonl()).map_err(input_err)?;

    let mut clouds: BTreeMap<&str, PointCloud> = BTreeMap::new();
    for t in &triggers {
        check_rel_component(&t.clip_id, "clip id")?;
        check_rel_path(&t.heatmap, "heatmap path")?;
        if !clouds.contains_key(t.clip_id.as_str()) {
            let cloud = read_ply(&layout.cloud_ply(&t.clip_id)).map_err(input_err)?;
            clouds.insert(&t.clip_id, cloud);
        }
    }

    run_stage(&layout.fuse_dir(), || {
        for clip_id in clouds.keys() {
            let dir = layout.fuse_dir().join(clip_id);
            std::fs::create_dir_all(&dir)
                .map_err(|e| stage_err(format!("create {}: {e}", dir.display())))?;
        }
        let fused: Vec<FusedRecord> = triggers
            .par_iter()
            .map(|t| -> CliResult<FusedRecord> {
                let h = read_heatmap(&layout.beamform_dir().join(&t.heatmap))
                    .map_err(input_err)?;
                let cloud = &clouds[t.clip_id.as_str()];
                let weighted = fuse(cloud, &h, &camera).map_err(stage_err)?;
                let rel = Path::new(&t.heatmap).with_extension("ply");
                let rel = rel.to_str().expect("utf8 relative path").to_string();
                write_weighted_ply(&layout.fuse_dir().join(&rel), &weighted)
                    .map_err(stage_err)?;
                Ok(FusedRecord {
                    clip_id: t.clip_id.clone(),
                    timestamp_s: t.timestamp_s,
                    cloud: rel,
                })
            })
            .collect::<CliResult<_>>()?;
        write_jsonl(&layout.fused_jsonl(), &fused).map_err(stage_err)?;
        println!(
            "fuse: {} weighted clouds over {} clips -> {}",
            fused.len(),
            clouds.len(),
            layout.fuse_dir().display()
        );
        Ok(())
    })
}
