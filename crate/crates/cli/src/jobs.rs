use implosion_core::almost_fatou::{a_eps, phi_eps_n, AlphaSequence, SequenceKind};
use implosion_core::config::{parse_complex, JobConfig};
use implosion_core::dynamics::{HenonParams, ModelFamily1D, ModelFamily2D, NormalizedHenon};
use implosion_core::escape::{par_grid, slice_grid, EscapeConfig, Grid, SliceGrid, SliceQuantity, SliceSpec};
use implosion_core::export::{
    band_color, class_color, green_color, hop_color, lavaurs_color, render, sidecar, write_csv, write_image,
    write_json, ImageFormat, RawPayload,
};
use implosion_core::fatou::{EigenFrame, FatouConfig, FatouEngine, Side};
use implosion_core::lavaurs::{
    choose_alpha_for, converge_t, count_chain_rows, hop_band, lavaurs_hop_grid, measured_drift, row_heterogeneity,
    transition_h, HopBudget, HopResult, LavaursPixel, ZetaBox,
};
use implosion_core::periodic::{
    newton_periodic, repelling_seed, saddle_creation, two_cycle, unstable_param, unstable_slice_grid, PeriodicOrbit,
    UnstableGrid, UnstableWindow,
};
use implosion_core::verify::{report_table, run_criterion, VerifyOptions, CRITERIA};
use implosion_core::{Error, Point2, Result, C64};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

fn common(command: &str) -> Vec<(&'static str, String)> {
    let threads = std::env::var(crate::THREADS_ENV).unwrap_or_else(|_| "0".into());
    vec![("out", format!("out/{command}")), ("format", "png".into()), ("csv", "false".into()), ("threads", threads)]
}

fn specific(command: &str) -> &'static [(&'static str, &'static str)] {
    match command {
        "slice" => &[
            ("kind", "eigenline"),
            ("quantity", "green"),
            ("a", "0.3"),
            ("eps", "0"),
            ("re_min", "-1.6"),
            ("re_max", "0.6"),
            ("im_min", "-1.1"),
            ("im_max", "1.1"),
            ("origin_x", "0"),
            ("origin_y", "0"),
            ("dir_x", "1"),
            ("dir_y", "1"),
            ("t_center", "0"),
            ("t_scale", "0.6"),
            ("order", "20"),
            ("width", "400"),
            ("height", "400"),
            ("n_max", "10000"),
            ("escape_radius", "10"),
        ],
        "fatou-grid" => &[
            ("a", "0.3"),
            ("alpha", "0"),
            ("re_min", "0"),
            ("re_max", "10"),
            ("im_min", "-5"),
            ("im_max", "5"),
            ("width", "500"),
            ("height", "500"),
        ],
        "lavaurs" => &[
            ("a", "0.3"),
            ("alpha", "0"),
            ("re_min", "-22"),
            ("re_max", "22"),
            ("im_min", "-22"),
            ("im_max", "22"),
            ("width", "500"),
            ("height", "500"),
            ("max_hops", "64"),
            ("n_max", "10000"),
            ("shade", "hops"),
        ],
        "converge" => &[
            ("family", "henon"),
            ("a", "0.3"),
            ("alpha", "0"),
            ("sequence", "full"),
            ("j_list", "1000,10000,100000"),
            ("hops", "1"),
            ("x", "-0.0666666666666667+0.133333333333333i"),
            ("y", "0"),
        ],
        "almost-fatou-table" => &[
            ("family", "model1d"),
            ("q", "-1"),
            ("r", "0.5"),
            ("b", "0.3"),
            ("x", "-0.1"),
            ("y", "0"),
            ("eps_list", "0.02,0.01,0.005,0.0025"),
            ("n_fraction", "0.5"),
            ("region_r", "0.5"),
        ],
        "periodic" => &[
            ("mode", "two-cycle"),
            ("a", "0.3"),
            ("eps", "0"),
            ("period", "2"),
            ("guess_x", "0.5"),
            ("guess_y", "0.5"),
            ("tol", "1e-12"),
        ],
        "saddle-creation" => &[("a", "0.3"), ("zeta0", "auto"), ("alpha", "auto"), ("j_list", "400,1600"), ("mu", "1")],
        "verify" => &[("tolerance_scale", "1"), ("lavaurs_resolution", "500"), ("only", "")],
        _ => &[],
    }
}

pub fn defaults(command: &str) -> JobConfig {
    let mut pairs: Vec<(&str, String)> = common(command);
    pairs.extend(specific(command).iter().map(|(k, v)| (*k, v.to_string())));
    let refs: Vec<(&str, &str)> = pairs.iter().map(|(k, v)| (*k, v.as_str())).collect();
    JobConfig::new(command, &refs)
}

pub fn run(command: &str, cfg: &JobConfig) -> Result<u8> {
    match command {
        "slice" => slice(cfg),
        "fatou-grid" => fatou_grid(cfg),
        "lavaurs" => lavaurs(cfg),
        "converge" => converge(cfg),
        "almost-fatou-table" => almost_fatou_table(cfg),
        "periodic" => periodic(cfg),
        "saddle-creation" => saddle(cfg),
        "verify" => return verify(cfg),
        _ => Err(Error::InvalidParams(format!("unknown command {command}"))),
    }?;
    Ok(0)
}

struct Output {
    prefix: PathBuf,
    format: ImageFormat,
    csv: bool,
}

impl Output {
    fn of(cfg: &JobConfig) -> Result<Self> {
        let prefix = PathBuf::from(cfg.get("out")?);
        if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        Ok(Output { prefix, format: cfg.get("format")?.parse()?, csv: flag(cfg, "csv")? })
    }

    fn path(&self, ext: &str) -> PathBuf {
        let mut s = self.prefix.as_os_str().to_owned();
        s.push(".");
        s.push(ext);
        PathBuf::from(s)
    }

    fn image_ext(&self) -> &'static str {
        match self.format {
            ImageFormat::Png => "png",
            ImageFormat::Ppm => "ppm",
        }
    }

    /// Image, raw payload and sidecar; returns the sidecar path.
    fn image(&self, cfg: &JobConfig, rgb: &[u8], payload: &RawPayload, extra: Value) -> Result<PathBuf> {
        write_image(&self.path(self.image_ext()), payload.width, payload.height, rgb, self.format)?;
        payload.write(&self.path("raw"))?;
        let side = self.path("json");
        write_json(&side, &sidecar(&cfg.command, cfg.to_json(), payload, extra))?;
        say!(
            "wrote {} ({}x{}, sha256 {})",
            self.path(self.image_ext()).display(),
            payload.width,
            payload.height,
            payload.sha256()
        );
        Ok(side)
    }

    fn record(&self, cfg: &JobConfig, result: Value) -> Result<()> {
        let v = json!({ "job": cfg.command, "config": cfg.to_json(), "result": result });
        write_json(&self.path("json"), &v)?;
        say!("wrote {}", self.path("json").display());
        Ok(())
    }
}

fn flag(cfg: &JobConfig, key: &str) -> Result<bool> {
    match cfg.get(key)? {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        v => Err(Error::InvalidParams(format!("{key}: expected true or false, got {v}"))),
    }
}

fn zeta_box(cfg: &JobConfig) -> Result<ZetaBox> {
    let b = ZetaBox {
        re_min: cfg.f64("re_min")?,
        re_max: cfg.f64("re_max")?,
        im_min: cfg.f64("im_min")?,
        im_max: cfg.f64("im_max")?,
    };
    if !(b.re_max > b.re_min && b.im_max > b.im_min) {
        return Err(Error::InvalidParams("empty window".into()));
    }
    Ok(b)
}

fn resolution(cfg: &JobConfig) -> Result<(usize, usize)> {
    let (w, h) = (cfg.usize("width")?, cfg.usize("height")?);
    if w == 0 || h == 0 {
        return Err(Error::InvalidParams("resolution must be positive".into()));
    }
    Ok((w, h))
}

fn c2j(z: C64) -> Value {
    json!([z.re, z.im])
}

fn p2j(p: Point2) -> Value {
    json!([[p.x.re, p.x.im], [p.y.re, p.y.im]])
}

fn fmt_c(z: C64) -> String {
    format!("{:.12e},{:.12e}", z.re, z.im)
}

/// Row-major grid CSV with the job parameters on a leading comment line.
fn grid_csv<T: Clone>(
    path: &Path,
    cfg: &JobConfig,
    g: &Grid<T>,
    at: impl Fn(usize, usize) -> C64,
    cell: impl Fn(&T) -> String,
) -> Result<()> {
    let params: Vec<String> = cfg.entries.iter().map(|(k, e)| format!("{k}={}", e.value)).collect();
    let mut s = format!("# {}\ni,j,re,im,value\n", params.join(" "));
    for i in 0..g.height {
        for j in 0..g.width {
            let z = at(i, j);
            s.push_str(&format!("{i},{j},{},{},{}\n", z.re, z.im, cell(g.get(i, j))));
        }
    }
    std::fs::write(path, s).map_err(|e| Error::Io(e.to_string()))
}

fn escape_cfg(cfg: &JobConfig) -> Result<EscapeConfig> {
    Ok(EscapeConfig { n_max: cfg.usize("n_max")?, escape_radius: cfg.f64("escape_radius")?, ..EscapeConfig::default() })
}

fn slice(cfg: &JobConfig) -> Result<()> {
    let out = Output::of(cfg)?;
    let f = HenonParams::new(cfg.complex("a")?, cfg.complex("eps")?)?;
    let frame = EigenFrame::henon(f.a)?;
    // The petal only certifies the basin of O for the parabolic map.
    let petal_frame = (f.eps == C64::new(0.0, 0.0)).then_some(&frame);
    let ecfg = escape_cfg(cfg)?;
    let green = match cfg.get("quantity")? {
        "green" => true,
        "class" => false,
        q => return Err(Error::InvalidParams(format!("quantity must be green or class, got {q}"))),
    };
    let (w, h) = resolution(cfg)?;
    match cfg.get("kind")? {
        kind @ ("eigenline" | "line") => {
            let (origin, direction) = if kind == "eigenline" {
                (Point2::ORIGIN, Point2::real(1.0, 1.0))
            } else {
                (
                    Point2::new(cfg.complex("origin_x")?, cfg.complex("origin_y")?),
                    Point2::new(cfg.complex("dir_x")?, cfg.complex("dir_y")?),
                )
            };
            let b = zeta_box(cfg)?;
            let spec = SliceSpec {
                origin,
                direction,
                re_min: b.re_min,
                re_max: b.re_max,
                im_min: b.im_min,
                im_max: b.im_max,
                width: w,
                height: h,
            };
            let q = if green { SliceQuantity::Green } else { SliceQuantity::Class };
            let extra =
                json!({ "origin": p2j(origin), "direction": p2j(direction), "petal_used": petal_frame.is_some() });
            match slice_grid(&f, petal_frame, &spec, &ecfg, q)? {
                SliceGrid::Green(g) => {
                    out.image(cfg, &render(&g, |v| green_color(*v)), &RawPayload::from_f64(&g), extra)?;
                    if out.csv {
                        grid_csv(&out.path("csv"), cfg, &g, |i, j| spec.param(i, j), |v| format!("{v:e}"))?;
                    }
                }
                SliceGrid::Class(g) => {
                    let codes: Vec<u8> = g.data.iter().map(|c| c.code()).collect();
                    out.image(cfg, &render(&g, class_color), &RawPayload::from_u8(w, h, &codes), extra)?;
                    if out.csv {
                        grid_csv(&out.path("csv"), cfg, &g, |i, j| spec.param(i, j), |c| c.code().to_string())?;
                    }
                }
            }
        }
        "unstable-2cycle" => {
            let orbit = two_cycle(f.a, f.eps)?;
            let param = unstable_param(&f, &orbit, cfg.usize("order")?)?;
            let win = UnstableWindow {
                center: cfg.complex("t_center")?,
                scale: cfg.complex("t_scale")?,
                width: w,
                height: h,
            };
            let extra = json!({
                "cycle": orbit.points.iter().map(|p| p2j(*p)).collect::<Vec<_>>(),
                "lambda": c2j(param.lambda),
                "petal_used": petal_frame.is_some(),
            });
            match unstable_slice_grid(&f, petal_frame, &param, &win, &ecfg, green)? {
                UnstableGrid::Green(g) => {
                    out.image(cfg, &render(&g, |v| green_color(*v)), &RawPayload::from_f64(&g), extra)?;
                    if out.csv {
                        grid_csv(&out.path("csv"), cfg, &g, |i, j| win.t(i, j), |v| format!("{v:e}"))?;
                    }
                }
                UnstableGrid::Class(g) => {
                    let codes: Vec<u8> = g.data.iter().map(|c| c.code()).collect();
                    out.image(cfg, &render(&g, class_color), &RawPayload::from_u8(w, h, &codes), extra)?;
                    if out.csv {
                        grid_csv(&out.path("csv"), cfg, &g, |i, j| win.t(i, j), |c| c.code().to_string())?;
                    }
                }
            }
        }
        k => {
            return Err(Error::InvalidParams(format!("slice kind must be eigenline, unstable-2cycle or line, got {k}")))
        }
    }
    Ok(())
}

fn henon_engine(cfg: &JobConfig) -> Result<FatouEngine<NormalizedHenon>> {
    FatouEngine::henon(cfg.complex("a")?, FatouConfig::default())
}

fn fatou_grid(cfg: &JobConfig) -> Result<()> {
    let out = Output::of(cfg)?;
    let eng = henon_engine(cfg)?;
    let alpha = cfg.complex("alpha")?;
    let b = zeta_box(cfg)?;
    let (w, h) = resolution(cfg)?;
    let g = par_grid(w, h, |i, j| transition_h(&eng, alpha, b.point(i, j, w, h)).ok());
    let re = Grid { width: w, height: h, data: g.data.iter().map(|v| v.map_or(f64::NAN, |z| z.re)).collect() };
    let im = Grid { width: w, height: h, data: g.data.iter().map(|v| v.map_or(f64::NAN, |z| z.im)).collect() };
    let im_payload = RawPayload::from_f64(&im);
    im_payload.write(&out.path("im.raw"))?;
    let missing = g.data.iter().filter(|v| v.is_none()).count();
    let extra = json!({ "payload": "Re h", "im_payload_sha256": im_payload.sha256(), "not_in_basin": missing });
    out.image(cfg, &render(&g, |v| band_color(*v)), &RawPayload::from_f64(&re), extra)?;
    if out.csv {
        grid_csv(&out.path("csv"), cfg, &g, |i, j| b.point(i, j, w, h), |v| v.map_or("nan,nan".into(), fmt_c))?;
    }
    Ok(())
}

fn lavaurs(cfg: &JobConfig) -> Result<()> {
    let out = Output::of(cfg)?;
    let eng = henon_engine(cfg)?;
    let alpha = cfg.complex("alpha")?;
    let b = zeta_box(cfg)?;
    let (w, h) = resolution(cfg)?;
    let budget = HopBudget { max_hops: cfg.usize("max_hops")?, n_max: cfg.usize("n_max")?, ..HopBudget::default() };
    let g = lavaurs_hop_grid(&eng, alpha, &b, w, h, &budget)?;
    let tri: Vec<LavaursPixel> = g.data.iter().map(|r| LavaursPixel::from_hop(*r)).collect();
    let count = |p: LavaursPixel| tri.iter().filter(|t| **t == p).count();
    let rgb: Vec<u8> = match cfg.get("shade")? {
        "hops" => render(&g, hop_color),
        "tri" => tri.iter().flat_map(lavaurs_color).collect(),
        s => return Err(Error::InvalidParams(format!("shade must be hops or tri, got {s}"))),
    };
    let codes: Vec<u8> = tri.iter().map(|t| t.code()).collect();
    let bands: Vec<u32> = g.data.iter().map(hop_band).collect();
    let band_payload = RawPayload::from_u32(w, h, &bands);
    band_payload.write(&out.path("hops.raw"))?;
    let extra = json!({
        "gray": count(LavaursPixel::Gray),
        "black": count(LavaursPixel::Black),
        "white": count(LavaursPixel::White),
        "indeterminate": count(LavaursPixel::Indeterminate),
        "chain_rows": count_chain_rows(&row_heterogeneity(&g), 0.05, 3),
        "drift_top": measured_drift(&g, &b, (b.im_max * 0.36).max(b.im_min), b.im_max),
        "hops_payload_sha256": band_payload.sha256(),
    });
    out.image(cfg, &rgb, &RawPayload::from_u8(w, h, &codes), extra)?;
    if out.csv {
        grid_csv(
            &out.path("csv"),
            cfg,
            &g,
            |i, j| b.point(i, j, w, h),
            |r: &HopResult| format!("{r:?}").replace(',', ";"),
        )?;
    }
    Ok(())
}

fn sequence_kind(cfg: &JobConfig) -> Result<SequenceKind> {
    match cfg.get("sequence")? {
        "full" => Ok(SequenceKind::Full),
        "half" => Ok(SequenceKind::Half),
        s => Err(Error::InvalidParams(format!("sequence must be full or half, got {s}"))),
    }
}

fn converge(cfg: &JobConfig) -> Result<()> {
    let out = Output::of(cfg)?;
    let alpha = cfg.complex("alpha")?;
    let kind = sequence_kind(cfg)?;
    let js = cfg.usize_list("j_list")?;
    let hops = cfg.usize("hops")?;
    let p = Point2::new(cfg.complex("x")?, cfg.complex("y")?);
    let rows = match cfg.get("family")? {
        "henon" => {
            let eng = henon_engine(cfg)?;
            let a = eng.map.a;
            converge_t(&eng, &AlphaSequence::henon(alpha, kind, a), p, &js, hops, |ep| NormalizedHenon {
                a,
                eps_prime: ep,
            })?
        }
        "model1d" => {
            let fam = ModelFamily1D::quadratic();
            let eng = FatouEngine::model_1d(&fam, FatouConfig::default())?;
            converge_t(&eng, &AlphaSequence::model(alpha, kind), p, &js, hops, |ep| fam.at(ep))?
        }
        f => return Err(Error::InvalidParams(format!("family must be henon or model1d, got {f}"))),
    };
    for r in &rows {
        match r.dist {
            Some(d) => say!("j={:>7} n={:>7} dist={d:.3e}", r.j, r.n),
            None => say!("j={:>7} n={:>7} escaped at step {}", r.j, r.n, r.escaped_at.unwrap_or(0)),
        }
    }
    if out.csv {
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    r.j.to_string(),
                    r.n.to_string(),
                    r.eps.re.to_string(),
                    r.eps.im.to_string(),
                    r.dist.map_or("nan".into(), |d| d.to_string()),
                ]
            })
            .collect();
        write_csv(&out.path("csv"), &["j", "n", "eps_re", "eps_im", "dist"], &table)?;
    }
    out.record(cfg, serde_json::to_value(&rows).expect("rows serialize"))
}

fn almost_fatou_table(cfg: &JobConfig) -> Result<()> {
    let out = Output::of(cfg)?;
    let p = Point2::new(cfg.complex("x")?, cfg.complex("y")?);
    let frac = cfg.f64("n_fraction")?;
    let rr = cfg.f64("region_r")?;
    let eps_list: Vec<C64> = cfg.get("eps_list")?.split(',').map(parse_complex).collect::<Result<_>>()?;
    let fam1 = ModelFamily1D::quadratic();
    let fam2 = ModelFamily2D::linear(cfg.complex("q")?, cfg.complex("r")?, cfg.complex("b")?);
    let family = cfg.get("family")?;
    let mut rows = Vec::new();
    for eps in eps_list {
        if eps.norm() == 0.0 {
            return Err(Error::InvalidParams("eps_list entries must be nonzero".into()));
        }
        let n = (frac * std::f64::consts::PI / eps.norm()).floor() as usize;
        let (res, a) = match family {
            "model1d" => (phi_eps_n(&fam1, p, eps, n, Side::Incoming, rr), a_eps(&fam1, eps, p)),
            "model2d" => (phi_eps_n(&fam2, p, eps, n, Side::Incoming, rr), a_eps(&fam2, eps, p)),
            f => return Err(Error::InvalidParams(format!("family must be model1d or model2d, got {f}"))),
        };
        let row = match res {
            Ok(v) => {
                json!({ "eps": c2j(eps), "n": n, "value": c2j(v.value), "k0": v.k0, "c0": v.c0, "a_eps": a.norm() })
            }
            Err(e) => json!({ "eps": c2j(eps), "n": n, "error": e.to_string(), "a_eps": a.norm() }),
        };
        say!("{row}");
        rows.push(row);
    }
    if out.csv {
        let cell = |r: &Value, k: &str, i: usize| r[k].get(i).map_or("nan".to_string(), |v| v.to_string());
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    cell(r, "eps", 0),
                    cell(r, "eps", 1),
                    r["n"].to_string(),
                    cell(r, "value", 0),
                    cell(r, "value", 1),
                    r.get("k0").map_or("nan".into(), |v| v.to_string()),
                    r.get("c0").map_or("nan".into(), |v| v.to_string()),
                    r["a_eps"].to_string(),
                ]
            })
            .collect();
        write_csv(&out.path("csv"), &["eps_re", "eps_im", "n", "value_re", "value_im", "k0", "c0", "a_eps"], &table)?;
    }
    out.record(cfg, json!(rows))
}

fn orbit_json(o: &PeriodicOrbit, a: C64) -> Value {
    json!({
        "period": o.period(),
        "points": o.points.iter().map(|p| p2j(*p)).collect::<Vec<_>>(),
        "multipliers": [c2j(o.multipliers.0), c2j(o.multipliers.1)],
        "log_multipliers": [c2j(o.log_multipliers.0), c2j(o.log_multipliers.1)],
        "kind": format!("{:?}", o.kind),
        "residual": o.residual,
        "log_det_defect": o.log_det_defect(a),
    })
}

fn periodic(cfg: &JobConfig) -> Result<()> {
    let out = Output::of(cfg)?;
    let f = HenonParams::new(cfg.complex("a")?, cfg.complex("eps")?)?;
    let orbit = match cfg.get("mode")? {
        "two-cycle" => two_cycle(f.a, f.eps)?,
        "newton" => {
            let guess = Point2::new(cfg.complex("guess_x")?, cfg.complex("guess_y")?);
            newton_periodic(&f, cfg.usize("period")?, guess, cfg.f64("tol")?)?
        }
        m => return Err(Error::InvalidParams(format!("mode must be two-cycle or newton, got {m}"))),
    };
    say!(
        "period {} {:?}, |multipliers| {:.6e} {:.6e}, residual {:.2e}",
        orbit.period(),
        orbit.kind,
        orbit.multipliers.0.norm(),
        orbit.multipliers.1.norm(),
        orbit.residual
    );
    if out.csv {
        let table: Vec<Vec<String>> =
            orbit.points.iter().enumerate().map(|(k, p)| vec![k.to_string(), fmt_c(p.x), fmt_c(p.y)]).collect();
        write_csv(&out.path("csv"), &["k", "x_re", "x_im", "y_re", "y_im"], &table)?;
    }
    out.record(cfg, orbit_json(&orbit, f.a))
}

fn saddle(cfg: &JobConfig) -> Result<()> {
    let out = Output::of(cfg)?;
    let eng = henon_engine(cfg)?;
    let (zeta0, alpha) = match (cfg.get("zeta0")?, cfg.get("alpha")?) {
        ("auto", "auto") => {
            let bx = ZetaBox { re_min: 0.0, re_max: 1.0, im_min: 2.5, im_max: 8.0 };
            repelling_seed(&eng, &bx, 12, 1.5)
                .ok_or_else(|| Error::NewtonFailed("no repelling seed on the scan grid".into()))?
        }
        ("auto", _) => return Err(Error::InvalidParams("alpha without zeta0".into())),
        (z, "auto") => {
            let z = parse_complex(z)?;
            (z, choose_alpha_for(&eng, z)?)
        }
        _ => (cfg.complex("zeta0")?, cfg.complex("alpha")?),
    };
    let mu = cfg.usize("mu")?;
    let mut records = Vec::new();
    let mut table = Vec::new();
    for j in cfg.usize_list("j_list")? {
        let r = saddle_creation(&eng, alpha, zeta0, j, mu)?;
        say!(
            "j={j} period {} {:?} dist {:.4e} residual {:.2e}",
            r.orbit.period(),
            r.orbit.kind,
            r.dist,
            r.orbit.residual
        );
        table.push(vec![
            j.to_string(),
            r.orbit.period().to_string(),
            format!("{:?}", r.orbit.kind),
            r.dist.to_string(),
            r.orbit.residual.to_string(),
            r.orbit.log_multipliers.0.re.to_string(),
            r.orbit.log_multipliers.1.re.to_string(),
        ]);
        records.push(json!({
            "j": j, "mu": mu, "eps": c2j(r.eps), "eps_prime": c2j(r.eps_prime), "p0": p2j(r.p0),
            "dist": r.dist, "orbit_start": p2j(r.orbit.points[0]), "orbit": orbit_json(&r.orbit, r.a),
        }));
    }
    if out.csv {
        write_csv(&out.path("csv"), &["j", "period", "kind", "dist", "residual", "log_abs_l1", "log_abs_l2"], &table)?;
    }
    out.record(cfg, json!({ "zeta0": c2j(zeta0), "alpha": c2j(alpha), "records": records }))
}

/// Exit status 1 when any criterion fails.
fn verify(cfg: &JobConfig) -> Result<u8> {
    let out = Output::of(cfg)?;
    let opts = VerifyOptions {
        tolerance_scale: cfg.f64("tolerance_scale")?,
        lavaurs_resolution: cfg.usize("lavaurs_resolution")?,
    };
    if !(opts.tolerance_scale >= 0.0) || opts.lavaurs_resolution == 0 {
        return Err(Error::InvalidParams("tolerance_scale must be >= 0 and lavaurs_resolution positive".into()));
    }
    let ids: Vec<u8> = match cfg.get("only")? {
        "" => CRITERIA.iter().map(|c| c.0).collect(),
        s => s
            .split(',')
            .map(|t| t.trim().parse::<u8>().map_err(|_| Error::InvalidParams(format!("bad criterion id {t}"))))
            .collect::<Result<_>>()?,
    };
    let mut reports = Vec::new();
    for id in ids {
        let r = run_criterion(id, &opts);
        say!("{}", r.line());
        reports.push(r);
    }
    let table = report_table(&reports);
    say!("{}", table.lines().last().unwrap_or(""));
    out.record(cfg, serde_json::to_value(&reports).expect("reports serialize"))?;
    Ok(if reports.iter().all(|r| r.passed) { 0 } else { 1 })
}
