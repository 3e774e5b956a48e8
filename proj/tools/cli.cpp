#include "usjoint/cli.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "usjoint/config.hpp"
#include "usjoint/container.hpp"
#include "usjoint/das.hpp"
#include "usjoint/forward_model.hpp"
#include "usjoint/image_export.hpp"
#include "usjoint/json_io.hpp"
#include "usjoint/metrics.hpp"
#include "usjoint/pipeline.hpp"

namespace usjoint {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return exit_config;
    case ErrorKind::io: return exit_io;
    case ErrorKind::not_found: return exit_missing;
    case ErrorKind::bad_magic:
    case ErrorKind::version_mismatch:
    case ErrorKind::truncated:
    case ErrorKind::structure: return exit_format;
    case ErrorKind::invalid_argument:
    case ErrorKind::dimension_mismatch: return exit_invariant;
    case ErrorKind::numerical:
    case ErrorKind::diverged:
    case ErrorKind::unresolved: return exit_numerical;
  }
  return exit_unexpected;
}

namespace {

namespace fs = std::filesystem;

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorKind::invalid_argument, what + ": '" + item + "' is not a number");
    }
  }
  return v;
}

// disc:z,x,r  annulus:z,x,r_in,r_out  rect:iz0,ix0,iz1,ix1 (meters / pixels)
PixelMask parse_mask(const std::string& text, const ImagingGrid& grid) {
  const auto colon = text.find(':');
  require(colon != std::string::npos, ErrorKind::invalid_argument,
          "mask '" + text + "' must look like shape:values");
  const auto shape = text.substr(0, colon);
  const auto v = parse_numbers(text.substr(colon + 1), "mask " + text);
  if (shape == "disc" && v.size() == 3) return disc_mask(grid, {v[0], v[1]}, v[2]);
  if (shape == "annulus" && v.size() == 4)
    return annulus_mask(grid, {v[0], v[1]}, v[2], v[3]);
  if (shape == "rect" && v.size() == 4)
    return rect_mask(grid, int(v[0]), int(v[1]), int(v[2]), int(v[3]));
  fail(ErrorKind::invalid_argument, "unknown mask '" + text + "'");
}

fs::path with_tx_suffix(const fs::path& p, std::size_t k, std::size_t count) {
  if (count <= 1) return p;
  fs::path out = p;
  out.replace_filename(p.stem().string() + "_tx" + std::to_string(k) + p.extension().string());
  return out;
}

RfImage read_rf(const fs::path& p) { return rf_image_from(read_container(p)); }

void write_json(const Json& j, const fs::path& path) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp);
    require(bool(f), ErrorKind::io, "cannot write " + path.string());
    f << std::setw(2) << j << '\n';
    require(bool(f), ErrorKind::io, "write failed: " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  require(!ec, ErrorKind::io, "cannot move " + tmp.string() + " to " + path.string());
}

// Experiment for `solve`: simulated from the config unless channel data is
// supplied, in which case the model follows the recorded probe and transmit.
Experiment solve_inputs(const RunConfig& cfg, const std::string& channel_path,
                        const std::string& das_path, const std::string& psf_path,
                        std::size_t tx_index) {
  if (channel_path.empty()) {
    require(cfg.phantom.type != PhantomSpec::Type::none, ErrorKind::config,
            "solve needs --channel or a config with a phantom");
    Experiment exp = prepare_experiment(cfg);
    require(tx_index < exp.models.size(), ErrorKind::invalid_argument,
            "--tx-index out of range");
    if (!das_path.empty()) exp.das[tx_index] = read_rf(das_path);
    if (!psf_path.empty()) set_solver_psf(exp, psf_from(read_container(psf_path)));
    return exp;
  }
  require(tx_index == 0, ErrorKind::invalid_argument,
          "--tx-index applies to simulated runs only");
  Experiment exp;
  exp.config = cfg;
  ChannelData ch = channel_from(read_container(channel_path));
  require(std::abs(ch.probe.sampling_freq - cfg.probe.sampling_freq) <=
              1e-9 * cfg.probe.sampling_freq,
          ErrorKind::config, "channel sampling frequency differs from the config");
  exp.config.probe = ch.probe;
  exp.config.tx = {ch.tx};
  exp.models.push_back(cached_system_matrix(ch.probe, cfg.grid, ch.tx,
                                            ch.samples.rows(), cfg.apod));
  exp.das.push_back(das_path.empty() ? das_beamform(ch, cfg.grid, cfg.apod) : read_rf(das_path));
  exp.channels.push_back(std::move(ch));
  set_solver_psf(exp, psf_path.empty() ? make_psf(exp.config, exp.models.front())
                                       : psf_from(read_container(psf_path)));
  return exp;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint beamforming and deconvolution for plane-wave ultrasound"};
  app.name("usjoint");
  app.require_subcommand(1);
  app.set_version_flag("--version", "usjoint 0.1.0");

  // simulate
  std::string sim_config, sim_out, sim_phantom_out;
  auto* sim = app.add_subcommand("simulate", "simulate channel data from a run config");
  sim->add_option("--config", sim_config, "run config (JSON)")->required();
  sim->add_option("--out", sim_out, "channel container; _txK is appended per transmit")->required();
  sim->add_option("--phantom-out", sim_phantom_out, "write the phantom container too");

  // model build
  std::string mb_config, mb_out, mb_cache;
  auto* model = app.add_subcommand("model", "system matrix utilities");
  model->require_subcommand(1);
  auto* mbuild = model->add_subcommand("build", "build and store the system matrix");
  mbuild->add_option("--config", mb_config, "run config (JSON)")->required();
  mbuild->add_option("--out", mb_out, "matrix file; _txK is appended per transmit");
  mbuild->add_option("--cache-dir", mb_cache, "cache directory (default $USJOINT_CACHE_DIR)");

  // das
  std::string das_channel, das_config, das_out;
  auto* das = app.add_subcommand("das", "delay-and-sum beamforming");
  das->add_option("--channel", das_channel, "channel container")->required();
  das->add_option("--config", das_config, "run config for grid and apodization")->required();
  das->add_option("--out", das_out, "RF image container")->required();

  // compound
  std::vector<std::string> cmp_inputs;
  std::string cmp_out;
  auto* cmp = app.add_subcommand("compound", "coherent compounding of RF images");
  cmp->add_option("--inputs", cmp_inputs, "RF image containers")->required();
  cmp->add_option("--out", cmp_out, "RF image container")->required();

  // solve
  std::string sv_config, sv_mode, sv_preset, sv_channel, sv_das, sv_psf, sv_out, sv_report;
  std::string sv_das_out, sv_psf_out;
  std::size_t sv_tx = 0;
  std::optional<int> sv_max_iter;
  std::optional<double> sv_epsilon;
  bool sv_no_timing = false;
  auto* solve_cmd = app.add_subcommand("solve", "ADMM reconstruction");
  solve_cmd->add_option("--config", sv_config, "run config (JSON)")->required();
  solve_cmd->add_option("--mode", sv_mode, "joint | beamform | deconv | sequential")
      ->check(CLI::IsMember({"joint", "beamform", "deconv", "sequential"}));
  solve_cmd->add_option("--preset", sv_preset, "hyperparameter preset")
      ->check(CLI::IsMember({"sr", "er", "sc", "ec", "cc", "cl"}));
  solve_cmd->add_option("--channel", sv_channel, "channel container (default: simulate)");
  solve_cmd->add_option("--das", sv_das, "DAS image container (default: beamform the channel)");
  solve_cmd->add_option("--psf", sv_psf, "PSF container (default: from the config)");
  solve_cmd->add_option("--tx-index", sv_tx, "transmit to reconstruct");
  solve_cmd->add_option("--max-iter", sv_max_iter, "outer iteration cap");
  solve_cmd->add_option("--epsilon", sv_epsilon, "relative objective tolerance");
  solve_cmd->add_option("--out", sv_out, "result RF image container")->required();
  solve_cmd->add_option("--report", sv_report, "solve report (JSON)");
  solve_cmd->add_option("--das-out", sv_das_out, "also write the DAS image");
  solve_cmd->add_option("--psf-out", sv_psf_out, "also write the solver PSF");
  solve_cmd->add_flag("--no-timing", sv_no_timing, "omit wall time from the report");

  // metrics
  std::string mt_image, mt_kind = "point", mt_config, mt_phantom, mt_reference, mt_roi,
                        mt_background, mt_out, mt_label;
  std::vector<std::string> mt_points;
  double mt_dr = 60.0;
  int mt_bins = 256;
  auto* metrics = app.add_subcommand("metrics", "image quality metrics");
  metrics->add_option("--image", mt_image, "RF image container")->required();
  metrics->add_option("--kind", mt_kind, "point | cyst")
      ->check(CLI::IsMember({"point", "cyst"}));
  metrics->add_option("--config", mt_config, "run config supplying targets or regions");
  metrics->add_option("--phantom", mt_phantom, "phantom container supplying targets or cysts");
  metrics->add_option("--point", mt_points, "point target z,x in meters (repeatable)");
  metrics->add_option("--roi", mt_roi, "ROI mask, e.g. disc:0.013,0,0.002");
  metrics->add_option("--background", mt_background, "background mask");
  metrics->add_option("--reference", mt_reference, "RF image used for histogram matching");
  metrics->add_option("--dynamic-range", mt_dr, "dB");
  metrics->add_option("--nbins", mt_bins, "gCNR histogram bins");
  metrics->add_option("--label", mt_label, "row label");
  metrics->add_option("--out", mt_out, "metrics report (JSON)");

  // export-png
  std::string ex_image, ex_out;
  double ex_dr = 60.0;
  auto* exp_cmd = app.add_subcommand("export-png", "grayscale B-mode image");
  exp_cmd->add_option("--image", ex_image, "RF or B-mode container")->required();
  exp_cmd->add_option("--out", ex_out, "output .png or .pgm")->required();
  exp_cmd->add_option("--dynamic-range", ex_dr, "dB, for RF input");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << '\n';
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "usjoint: " << e.what() << '\n';
    return exit_usage;
  }

  try {
    if (*sim) {
      const RunConfig cfg = load_run_config(sim_config);
      const Experiment exp = prepare_experiment(cfg);
      for (std::size_t k = 0; k < exp.channels.size(); ++k) {
        const auto path = with_tx_suffix(sim_out, k, exp.channels.size());
        write_container(to_container(exp.channels[k]), path);
        out << "wrote " << path.string() << " (" << exp.channels[k].samples.rows() << " x "
            << exp.channels[k].samples.cols() << ")\n";
      }
      if (!sim_phantom_out.empty()) {
        write_container(to_container(exp.phantom), sim_phantom_out);
        out << "wrote " << sim_phantom_out << '\n';
      }
    } else if (*mbuild) {
      const RunConfig cfg = load_run_config(mb_config);
      std::optional<fs::path> dir = mb_cache.empty() ? matrix_cache_dir()
                                                     : std::optional<fs::path>(mb_cache);
      require(!mb_out.empty() || dir, ErrorKind::config,
              "model build needs --out, --cache-dir or USJOINT_CACHE_DIR");
      for (std::size_t k = 0; k < cfg.tx.size(); ++k) {
        const auto m = build_system_matrix(cfg.probe, cfg.grid, cfg.tx[k], cfg.num_samples, cfg.apod);
        const fs::path path = mb_out.empty() ? matrix_cache_file(*dir, m.fingerprint)
                                             : with_tx_suffix(mb_out, k, cfg.tx.size());
        if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
        write_matrix_cache(m, path);
        out << "wrote " << path.string() << " rows=" << m.rows() << " cols=" << m.cols()
            << " nnz=" << m.weights.nonZeros() << '\n';
      }
    } else if (*das) {
      const RunConfig cfg = load_run_config(das_config);
      const ChannelData ch = channel_from(read_container(das_channel));
      write_container(to_container(das_beamform(ch, cfg.grid, cfg.apod)), das_out);
      out << "wrote " << das_out << '\n';
    } else if (*cmp) {
      std::vector<RfImage> images;
      for (const auto& p : cmp_inputs) images.push_back(read_rf(p));
      write_container(to_container(compound(images)), cmp_out);
      out << "wrote " << cmp_out << " from " << images.size() << " images\n";
    } else if (*solve_cmd) {
      RunConfig cfg = load_run_config(sv_config);
      const Preset preset =
          sv_preset.empty() ? cfg.preset.value_or(Preset::sr) : parse_preset(sv_preset);
      const SolveMode mode = sv_mode.empty() ? cfg.solver.mode : parse_solve_mode(sv_mode);
      // The config already carries its preset plus overrides; flags re-select.
      SolverConfig sc = cfg.solver;
      if (!sv_preset.empty() || !sv_mode.empty()) sc = preset_config(preset, mode, cfg.solver);
      sc.mode = mode;
      if (sv_max_iter) sc.max_iter = *sv_max_iter;
      if (sv_epsilon) sc.epsilon = *sv_epsilon;
      sc.validate();

      const Experiment exp = solve_inputs(cfg, sv_channel, sv_das, sv_psf, sv_tx);
      const SolveReport rep = reconstruct(exp, sc, sv_tx);
      write_container(to_container(rep.result), sv_out);
      if (!sv_das_out.empty()) write_container(to_container(exp.das[sv_tx]), sv_das_out);
      if (!sv_psf_out.empty()) write_container(to_container(exp.psf), sv_psf_out);
      if (!sv_report.empty()) {
        Json j = to_json(rep, !sv_no_timing);
        j["preset"] = to_string(preset);
        j["psf_gain"] = exp.psf_gain;
        write_json(j, sv_report);
      }
      const auto& c = sc.effective();
      out << to_string(mode) << ": gamma_d=" << c.gamma_d << " gamma_b=" << c.gamma_b
          << " beta=" << c.beta << " mu=" << c.mu << "; " << rep.iterations << " iterations, "
          << (rep.converged ? "converged" : "stopped at the iteration cap") << '\n';
    } else if (*metrics) {
      const RfImage img = read_rf(mt_image);
      std::optional<RunConfig> cfg;
      if (!mt_config.empty()) cfg = load_run_config(mt_config);
      std::optional<Phantom> ph;
      if (!mt_phantom.empty()) ph = phantom_from(read_container(mt_phantom));
      const std::string label = mt_label.empty() ? fs::path(mt_image).stem().string() : mt_label;

      MetricsReport rep;
      if (mt_kind == "point") {
        std::vector<PointTarget> targets;
        std::vector<Point2> pts;
        for (const auto& s : mt_points) {
          const auto v = parse_numbers(s, "--point");
          require(v.size() == 2, ErrorKind::invalid_argument, "--point expects z,x");
          pts.push_back({v[0], v[1]});
        }
        if (pts.empty() && cfg) pts = cfg->phantom.points;
        for (const auto& p : pts) {
          int iz = 0, ix = 0;
          require(img.grid.nearest(p, iz, ix), ErrorKind::invalid_argument,
                  "point target outside the image grid");
          targets.push_back({iz, ix});
        }
        if (targets.empty() && ph) targets = ph->points;
        require(!targets.empty(), ErrorKind::invalid_argument,
                "no point targets: pass --point, --config or --phantom");
        rep = resolution_metrics(img, targets, label);
      } else {
        std::vector<RegionSpec> regions;
        if (!mt_roi.empty() || !mt_background.empty()) {
          require(!mt_roi.empty() && !mt_background.empty(), ErrorKind::invalid_argument,
                  "--roi and --background go together");
          regions.push_back({parse_mask(mt_roi, img.grid), parse_mask(mt_background, img.grid),
                             false});
        } else if (cfg) {
          std::vector<CystRegion> cysts;
          if (ph) cysts = ph->cysts;
          else if (cfg->phantom.type == PhantomSpec::Type::cyst)
            cysts.push_back({cfg->phantom.center, cfg->phantom.radius});
          regions = metric_regions(*cfg, cysts);
        } else if (ph) {
          for (const auto& c : ph->cysts) regions.push_back(cyst_regions(img.grid, c));
        }
        require(!regions.empty(), ErrorKind::invalid_argument,
                "no regions: pass --roi/--background, --config or --phantom");
        const RfImage ref_rf = mt_reference.empty() ? img : read_rf(mt_reference);
        const BModeImage ref = log_compress(envelope(ref_rf), mt_dr);
        rep = contrast_metrics(img, ref, regions, mt_dr, mt_bins, label);
      }
      out << format_metrics_table({rep});
      if (!mt_out.empty()) write_json(to_json(rep), mt_out);
    } else if (*exp_cmd) {
      const ContainerFile f = read_container(ex_image);
      BModeImage b;
      if (f.kind == ContainerKind::bmode) b = bmode_from(f);
      else b = log_compress(envelope(rf_image_from(f)), ex_dr);
      const auto ext = fs::path(ex_out).extension().string();
      if (ext == ".pgm") write_pgm(b, ex_out);
      else if (ext == ".png") write_png(b, ex_out);
      else fail(ErrorKind::invalid_argument, "--out must end in .png or .pgm");
      out << "wrote " << ex_out << '\n';
    }
  } catch (const Error& e) {
    err << "usjoint: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "usjoint: " << e.what() << '\n';
    return exit_config;
  } catch (const fs::filesystem_error& e) {
    err << "usjoint: " << e.what() << '\n';
    return exit_io;
  } catch (const std::exception& e) {
    err << "usjoint: " << e.what() << '\n';
    return exit_unexpected;
  }
  return exit_ok;
}

}  // namespace usjoint
