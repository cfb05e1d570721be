//! One function per verb.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::Matrix3;
use rirfit::data::{evaluate, Dataset, Split};
use rirfit::dsp::AudioClip;
use rirfit::fit::{fit, localize_source, TrainingPoint};
use rirfit::geometry::{Point, Room};
use rirfit::models::{transfer_surface, translate_source, SceneParams};
use rirfit::render::{
    binauralize, render_grid, render_music, render_rir, render_soundfield, Grid, GridSpec, HrirBank,
};
use rirfit::tracer::write_jsonl;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::{Cli, CliError, Verb};

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    png: bool,
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::load(&cli.config, &cli.overrides)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    let ctx = Ctx { cfg, out, png: cli.png };
    match cli.verb {
        Verb::Trace => trace(&ctx),
        Verb::Localize => localize(&ctx),
        Verb::Fit => fit_cmd(&ctx),
        Verb::Render => render(&ctx),
        Verb::RenderMusic => render_music_cmd(&ctx),
        Verb::Binauralize => binaural(&ctx),
        Verb::Grid => grid(&ctx, false),
        Verb::Soundfield => grid(&ctx, true),
        Verb::Eval => eval(&ctx),
        Verb::Transfer => transfer(&ctx),
    }
}

fn missing(what: &str) -> CliError {
    CliError::Runtime(format!("configuration has no `{what}`"))
}

impl Ctx {
    fn seed(&self) -> u64 {
        self.cfg.fit.random_seed
    }

    fn dataset(&self) -> Result<Dataset, CliError> {
        let root = self.cfg.dataset.as_ref().ok_or_else(|| missing("dataset"))?;
        Ok(Dataset::load(root)?)
    }

    fn room(&self) -> Result<Room, CliError> {
        match &self.cfg.room {
            Some(p) => Ok(Room::load(p)?),
            None => Ok(self.dataset()?.room),
        }
    }

    /// Checkpoint parameters, with the source moved when one is configured.
    fn params(&self) -> Result<SceneParams, CliError> {
        let dir = self.cfg.checkpoint.as_ref().ok_or_else(|| missing("checkpoint"))?;
        let p = SceneParams::load(dir)?;
        Ok(match self.cfg.source {
            Some(s) => translate_source(&p, &(Point::from(s) - p.source_location)),
            None => p,
        })
    }

    fn listeners(&self) -> Result<Vec<Point>, CliError> {
        if self.cfg.listeners.is_empty() {
            return Err(missing("listeners"));
        }
        Ok(self.cfg.listeners.iter().map(|l| Point::from(*l)).collect())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Write `body` with the run seed added.
    fn report(&self, name: &str, mut body: Value) -> Result<(), CliError> {
        body["randomSeed"] = json!(self.seed());
        let path = self.path(name);
        let text = serde_json::to_string_pretty(&body).map_err(|e| CliError::Runtime(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
    }

    fn wav(&self, name: &str, clip: &AudioClip) -> Result<String, CliError> {
        clip.write_wav(&self.path(name))?;
        Ok(name.to_string())
    }
}

fn trace(ctx: &Ctx) -> Result<(), CliError> {
    let room = ctx.room()?;
    let source = match ctx.cfg.source {
        Some(s) => Point::from(s),
        None => ctx.dataset()?.source_location().ok_or_else(|| missing("source"))?,
    };
    let mut rows = Vec::new();
    for (i, l) in ctx.listeners()?.iter().enumerate() {
        let set = ctx.cfg.render.trace(&room, &source, l)?;
        let name = format!("paths_{i:03}.jsonl");
        write_jsonl(&ctx.path(&name), &set.paths)?;
        rows.push(json!({"listener": [l.x, l.y, l.z], "paths": set.len(), "file": name}));
    }
    ctx.report(
        "trace.json",
        json!({"source": [source.x, source.y, source.z], "listeners": rows}),
    )
}

fn training(ds: &Dataset) -> Result<(Vec<Point>, Vec<AudioClip>), CliError> {
    let mut mics = Vec::new();
    let mut clips = Vec::new();
    for (i, e) in ds.entries(Split::Train) {
        mics.push(e.position());
        clips.push(ds.load_rir(i)?);
    }
    if mics.is_empty() {
        return Err(CliError::Runtime("dataset has no training entries".into()));
    }
    Ok((mics, clips))
}

fn localize(ctx: &Ctx) -> Result<(), CliError> {
    let ds = ctx.dataset()?;
    let (mics, clips) = training(&ds)?;
    let mono: Vec<AudioClip> = clips
        .iter()
        .map(|c| Ok(AudioClip::mono(c.mono_samples()?.to_vec(), c.sample_rate())))
        .collect::<rirfit::Result<_>>()?;
    let loc = localize_source(&mono, &mics, ds.room.speed_of_sound())?;
    for w in &loc.warnings {
        log::warn!("{w}");
    }
    let p = loc.position;
    let mut body = json!({
        "position": [p.x, p.y, p.z],
        "residualSeconds": loc.residual,
        "warnings": loc.warnings,
    });
    if let Some(s) = ds.source_location() {
        body["errorToDatasetSource"] = json!((p - s).norm());
    }
    ctx.report("localization.json", body)
}

fn fit_cmd(ctx: &Ctx) -> Result<(), CliError> {
    let ds = ctx.dataset()?;
    let (mics, clips) = training(&ds)?;
    let points = mics
        .iter()
        .zip(&clips)
        .map(|(m, c)| {
            Ok(TrainingPoint {
                listener: *m,
                rir: c.mono_samples()?.to_vec(),
            })
        })
        .collect::<rirfit::Result<Vec<_>>>()?;
    let source = ctx.cfg.source.map(Point::from);
    let (params, mut report) = fit(&points, &ds.room, source, &ctx.cfg.render, &ctx.cfg.fit)?;
    let ck = ctx.path("checkpoint");
    params.save(&ck)?;
    report.final_params = Some(ck.display().to_string());
    let body = serde_json::to_value(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
    ctx.report("fit_report.json", body)
}

fn render(ctx: &Ctx) -> Result<(), CliError> {
    let params = ctx.params()?;
    let room = ctx.room()?;
    let mut files = Vec::new();
    for (i, l) in ctx.listeners()?.iter().enumerate() {
        let clip = render_rir(&params, &params.source_location, l, &room, &ctx.cfg.render)?;
        files.push(ctx.wav(&format!("rir_{i:03}.wav"), &clip)?);
    }
    ctx.report("render.json", json!({"files": files}))
}

fn render_music_cmd(ctx: &Ctx) -> Result<(), CliError> {
    let params = ctx.params()?;
    let room = ctx.room()?;
    let dry_path = ctx.cfg.dry_audio.as_ref().ok_or_else(|| missing("dryAudio"))?;
    let dry = AudioClip::read_wav(dry_path)?;
    let mut files = Vec::new();
    for (i, l) in ctx.listeners()?.iter().enumerate() {
        let clip = render_music(&params, &params.source_location, l, &room, &ctx.cfg.render, &dry)?;
        files.push(ctx.wav(&format!("music_{i:03}.wav"), &clip)?);
    }
    ctx.report("render_music.json", json!({"files": files}))
}

fn binaural(ctx: &Ctx) -> Result<(), CliError> {
    let params = ctx.params()?;
    let room = ctx.room()?;
    let bank = HrirBank::load(ctx.cfg.hrir_dir.as_ref().ok_or_else(|| missing("hrirDir"))?)?;
    let mut render = ctx.cfg.render.clone();
    render.hrir_set = Some(Arc::new(bank));
    let head = match ctx.cfg.head_orientation {
        Some(cols) => Matrix3::from_columns(&cols.map(nalgebra::Vector3::from)),
        None => Matrix3::identity(),
    };
    let mut files = Vec::new();
    for (i, l) in ctx.listeners()?.iter().enumerate() {
        let clip = binauralize(&params, &params.source_location, l, &room, &render, &head)?;
        files.push(ctx.wav(&format!("binaural_{i:03}.wav"), &clip)?);
    }
    ctx.report("binauralize.json", json!({"files": files}))
}

fn write_png(path: &Path, grid: &Grid) -> Result<(), CliError> {
    let (w, h, px) = grid.to_gray8();
    let img = image::GrayImage::from_raw(w, h, px).expect("raster size matches grid");
    img.save(path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn grid(ctx: &Ctx, low_band: bool) -> Result<(), CliError> {
    let params = ctx.params()?;
    let room = ctx.room()?;
    let spec = GridSpec {
        z: ctx.cfg.grid.z,
        resolution: ctx.cfg.grid.resolution,
    };
    let (name, g) = if low_band {
        ("soundfield", render_soundfield(&params, &room, &ctx.cfg.render, spec)?)
    } else {
        ("grid", render_grid(&params, &room, &ctx.cfg.render, spec)?)
    };
    let csv = ctx.path(&format!("{name}.csv"));
    std::fs::write(&csv, g.to_csv()).map_err(|e| CliError::Runtime(format!("{}: {e}", csv.display())))?;
    if ctx.png {
        write_png(&ctx.path(&format!("{name}.png")), &g)?;
    }
    ctx.report(
        &format!("{name}.json"),
        json!({"columns": g.xs.len(), "rows": g.ys.len(), "z": g.z, "csv": format!("{name}.csv")}),
    )
}

fn eval(ctx: &Ctx) -> Result<(), CliError> {
    let ds = ctx.dataset()?;
    let params = ctx.params()?;
    let report = evaluate(&ds, &params, &ctx.cfg.render)?;
    let csv = ctx.path("eval.csv");
    std::fs::write(&csv, report.to_csv()).map_err(|e| CliError::Runtime(format!("{}: {e}", csv.display())))?;
    let body = serde_json::to_value(&report.summary).map_err(|e| CliError::Runtime(e.to_string()))?;
    ctx.report("eval.json", body)
}

fn transfer(ctx: &Ctx) -> Result<(), CliError> {
    let to = ctx.params()?;
    let room = ctx.room()?;
    let t = &ctx.cfg.transfer;
    let from = SceneParams::load(t.from.as_ref().ok_or_else(|| missing("transfer.from"))?)?;
    let from_id = t.from_surface.ok_or_else(|| missing("transfer.fromSurface"))?;
    let to_id = t.to_surface.ok_or_else(|| missing("transfer.toSurface"))?;
    let out = transfer_surface(&from, from_id, &to, to_id, &room)?;
    let ck = ctx.path("checkpoint");
    out.save(&ck)?;
    ctx.report(
        "transfer.json",
        json!({"fromSurface": from_id, "toSurface": to_id, "checkpoint": ck.display().to_string()}),
    )
}
