#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlr/mlr.hpp"

namespace {

using nlohmann::json;

enum Exit { kOk = 0, kUnexpected = 1, kInvalid = 2, kNumerical = 3, kFormat = 4 };

// One option that may also come from --config and is echoed in the sidecar.
struct Binding {
  std::string key;
  CLI::Option* opt;
  std::function<void(const mlr::ConfigEntry&)> from_config;
  std::function<json()> to_json;
};

class Options {
public:
  explicit Options(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_, "key = value file; command-line flags take precedence");
  }

  template <class T>
  CLI::Option* add(const std::string& key, T& var, const std::string& help) {
    CLI::Option* o = app_->add_option("--" + key, var, help)->capture_default_str();
    bindings_.push_back({key, o, [key, &var](const mlr::ConfigEntry& e) { var = mlr::config_value<T>(key, e); },
                         [&var] { return json(var); }});
    return o;
  }

  void apply_config() {
    if (config_.empty()) return;
    std::set<std::string> keys;
    for (const auto& b : bindings_) keys.insert(b.key);
    const mlr::ConfigMap cfg = mlr::parse_config_file(config_, keys);
    for (const auto& b : bindings_) {
      auto it = cfg.find(b.key);
      if (it != cfg.end() && b.opt->count() == 0) b.from_config(it->second);
    }
  }

  json settings() const {
    json j = json::object();
    for (const auto& b : bindings_) j[b.key] = b.to_json();
    return j;
  }

private:
  CLI::App* app_;
  std::string config_;
  std::vector<Binding> bindings_;
};

std::string psnr_text(double v) { return std::isinf(v) ? std::string("inf") : std::to_string(v); }

json psnr_json(double v) { return std::isinf(v) ? json("inf") : json(v); }

void write_sidecar(const std::string& output, const std::string& command, const json& settings, const json& derived) {
  json j;
  j["command"] = command;
  j["settings"] = settings;
  j["derived"] = derived;
  std::ofstream os(output + ".meta.json");
  if (!os) throw mlr::InvalidArgument("cannot write " + output + ".meta.json");
  os << j.dump(2) << '\n';
}

void write_trace(const std::string& path, const mlr::ConvergenceTrace& trace) {
  if (path.empty()) return;
  std::ofstream os(path);
  if (!os) throw mlr::InvalidArgument("cannot open " + path + " for writing");
  trace.write_csv(os);
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw mlr::InvalidArgument(std::string("missing required option ") + flag);
}

// Shared solver knobs.
struct Solver {
  int patch_size = 7;
  std::size_t knn = 20;
  double lambda = 0.0;
  double mu = 1.0;
  double mu2 = 1.0;
  int outer = 6;
  int inner = 1;
  double tol = 1e-8;
  int cg_max_iter = 2000;
  std::uint64_t seed = 0;

  void bind(Options& o, bool with_lambda, bool with_mu2) {
    o.add("patch-size", patch_size, "patch side tau (odd)");
    o.add("knn", knn, "nearest neighbours K");
    if (with_lambda) o.add("lambda", lambda, "diffusion weight (negative sharpens)");
    o.add("mu", mu, "augmented Lagrangian weight; SVT threshold 1/mu");
    if (with_mu2) o.add("mu2", mu2, "fidelity weight");
    o.add("outer", outer, "manifold updates");
    o.add("inner", inner, "sweeps per manifold");
    o.add("tol", tol, "CG relative tolerance");
    o.add("cg-max-iter", cg_max_iter, "CG iteration cap");
    o.add("seed", seed, "random seed");
  }
};

// ---------------------------------------------------------------- phantom

struct PhantomCmd {
  std::string kind = "disk";
  std::size_t size = 64;
  std::string output;

  void bind(Options& o) {
    o.add("kind", kind, "disk | shepp | texture | disk-texture");
    o.add("size", size, "image side N");
    o.add("output", output, "PGM output");
  }

  void run(const Options& o) const {
    require(output, "--output");
    const mlr::ImageGrid img = mlr::make_phantom(mlr::parse_phantom_kind(kind), size);
    mlr::write_pgm(img, output);
    write_sidecar(output, "phantom", o.settings(), json::object());
  }
};

// ---------------------------------------------------------------- mask

struct MaskCmd {
  std::string kind = "random";
  double rate = 0.2;
  std::size_t stride = 2;
  std::size_t size = 0;
  std::size_t rows = 0, cols = 0;
  std::uint64_t seed = 0;
  std::string input, output;

  void bind(Options& o) {
    o.add("kind", kind, "random | grid");
    o.add("rate", rate, "known fraction for random masks");
    o.add("stride", stride, "grid spacing s");
    o.add("size", size, "square side (alternative to --rows/--cols)");
    o.add("rows", rows, "mask rows");
    o.add("cols", cols, "mask columns");
    o.add("seed", seed, "random seed");
    o.add("input", input, "take the shape from this PGM");
    o.add("output", output, "PGM output (255 = known)");
  }

  void run(const Options& o) const {
    require(output, "--output");
    std::size_t m = rows, n = cols;
    if (size) m = n = size;
    if (!input.empty()) {
      const mlr::ImageGrid ref = mlr::read_pgm(input);
      m = ref.rows();
      n = ref.cols();
    }
    if (m == 0 || n == 0) throw mlr::InvalidArgument("mask: give --size, --rows/--cols or --input");
    mlr::MaskSpec spec;
    if (kind == "random")
      spec.kind = mlr::MaskSpec::Kind::RandomRate;
    else if (kind == "grid")
      spec.kind = mlr::MaskSpec::Kind::GridSubsample;
    else
      throw mlr::InvalidArgument("mask: unknown kind '" + kind + "'");
    spec.rate = rate;
    spec.stride = stride;
    spec.seed = seed;
    const mlr::Mask mask = mlr::gen_mask(spec, m, n);
    mlr::write_pgm(mlr::mask_to_image(mask), output);
    write_sidecar(output, "mask", o.settings(), {{"rows", m}, {"cols", n}, {"known", mask.count()}});
  }
};

// ---------------------------------------------------------------- psnr

struct PsnrCmd {
  std::string input, ref, output;

  void bind(Options& o) {
    o.add("input", input, "estimate PGM");
    o.add("ref", ref, "reference PGM");
    o.add("output", output, "optional text file for the value");
  }

  void run(const Options& o) const {
    require(input, "--input");
    require(ref, "--ref");
    const double v = mlr::psnr(mlr::read_pgm(input), mlr::read_pgm(ref));
    std::cout << psnr_text(v) << '\n';
    if (!output.empty()) {
      std::ofstream os(output);
      if (!os) throw mlr::InvalidArgument("cannot open " + output);
      os << psnr_text(v) << '\n';
      write_sidecar(output, "psnr", o.settings(), {{"psnr_db", psnr_json(v)}});
    }
  }
};

// ---------------------------------------------------------------- inpaint / superres grid

mlr::ImageGrid start_image(const std::string& init, const mlr::ImageGrid& data, const mlr::Mask& known) {
  if (init == "harmonic") return mlr::harmonic_extension(data, known, mlr::grid_graph(data.rows(), data.cols()));
  throw mlr::InvalidArgument("unknown --init '" + init + "' (random | harmonic)");
}

json run_inpaint(const mlr::ImageGrid& data, const mlr::Mask& known, const Solver& s, const std::string& init,
                 const std::string& ref, const std::string& output, const std::string& trace_out) {
  mlr::InpaintProblem prob{data, known, mlr::PatchConfig::from_patch_size(s.patch_size, s.knn), std::nullopt};
  if (init != "random") prob.initial = start_image(init, data, known);
  mlr::SolverParams p;
  p.lambda = s.lambda;
  p.mu = s.mu;
  p.outer_iters = s.outer;
  p.inner_iters = s.inner;
  p.tol = s.tol;
  p.cg_max_iter = s.cg_max_iter;
  p.seed = s.seed;
  const mlr::InpaintResult res = mlr::solve_inpaint(prob, p);
  mlr::write_pgm(res.image, output);
  write_trace(trace_out, res.trace);
  json derived = {{"rows", data.rows()}, {"cols", data.cols()}, {"known", known.count()}, {"sweeps", res.trace.rows.size()}};
  if (!ref.empty()) {
    const double v = mlr::psnr(res.image, mlr::read_pgm(ref));
    derived["psnr_db"] = psnr_json(v);
    std::cout << "psnr " << psnr_text(v) << " dB\n";
  }
  return derived;
}

struct InpaintCmd {
  Solver solver;
  std::string input, mask, ref, output, trace_out, init = "random";

  void bind(Options& o) {
    solver.bind(o, true, false);
    o.add("input", input, "observed PGM (values off the mask are ignored)");
    o.add("mask", mask, "mask PGM (nonzero = known)");
    o.add("ref", ref, "ground truth PGM for a PSNR report");
    o.add("output", output, "PGM output");
    o.add("trace-out", trace_out, "CSV trace iter,objective,residual");
    o.add("init", init, "random | harmonic");
  }

  void run(const Options& o) const {
    require(input, "--input");
    require(mask, "--mask");
    require(output, "--output");
    const mlr::ImageGrid data = mlr::read_pgm(input);
    const mlr::Mask known = mlr::mask_from_image(mlr::read_pgm(mask));
    json derived = run_inpaint(data, known, solver, init, ref, output, trace_out);
    write_sidecar(output, "inpaint", o.settings(), derived);
  }
};

// ---------------------------------------------------------------- superres

struct SuperresCmd {
  Solver solver;
  std::string mode = "grid";
  std::size_t factor = 2;
  std::string input, ref, output, trace_out, init = "harmonic";
  int init_iters = 1;

  void bind(Options& o) {
    solver.bind(o, true, true);
    o.add("mode", mode, "grid | average");
    o.add("factor", factor, "upsampling factor s");
    o.add("input", input, "low-resolution PGM");
    o.add("ref", ref, "ground truth PGM for a PSNR report");
    o.add("output", output, "PGM output");
    o.add("trace-out", trace_out, "CSV trace iter,objective,residual");
    o.add("init", init, "grid: random | harmonic; average: random | lsq");
    o.add("init-iters", init_iters, "CG steps of the lsq start");
  }

  void run(const Options& o) const {
    require(input, "--input");
    require(output, "--output");
    if (factor == 0) throw mlr::InvalidArgument("superres: factor must be positive");
    const mlr::ImageGrid low = mlr::read_pgm(input);
    const std::size_t m = low.rows() * factor, n = low.cols() * factor;
    json derived;
    if (mode == "grid") {
      mlr::ImageGrid data(m, n);
      mlr::Mask known(m, n);
      for (std::size_t r = 0; r < low.rows(); ++r)
        for (std::size_t c = 0; c < low.cols(); ++c) {
          data(r * factor, c * factor) = low(r, c);
          known.known[r * factor * n + c * factor] = 1;
        }
      derived = run_inpaint(data, known, solver, init, ref, output, trace_out);
    } else if (mode == "average") {
      mlr::LinopProblem p;
      p.op = mlr::build_average_operator(m, n, factor);
      p.g = low.vec();
      p.cfg = mlr::PatchConfig::from_patch_size(solver.patch_size, solver.knn);
      p.rows = m;
      p.cols = n;
      p.mu1 = solver.mu;
      p.mu2 = solver.mu2;
      p.outer_iters = solver.outer;
      p.inner_iters = solver.inner;
      p.tol = solver.tol;
      p.cg_max_iter = solver.cg_max_iter;
      p.seed = solver.seed;
      if (init == "lsq") {
        p.init = mlr::LinopInit::LeastSquares;
        p.init_iters = init_iters;
      } else if (init != "random") {
        throw mlr::InvalidArgument("superres average: --init must be random or lsq");
      }
      const mlr::LinopResult res = mlr::solve_linop(p);
      mlr::write_pgm(res.image, output);
      write_trace(trace_out, res.trace);
      derived = {{"rows", m}, {"cols", n}, {"fidelity", mlr::relative_fidelity(p.op, res.image.vec(), p.g)}};
      if (!ref.empty()) {
        const double v = mlr::psnr(res.image, mlr::read_pgm(ref));
        derived["psnr_db"] = psnr_json(v);
        std::cout << "psnr " << psnr_text(v) << " dB\n";
      }
    } else {
      throw mlr::InvalidArgument("superres: unknown mode '" + mode + "'");
    }
    write_sidecar(output, "superres", o.settings(), derived);
  }
};

// ---------------------------------------------------------------- CT

struct Geometry {
  std::size_t size = 64;
  std::size_t views = 30;
  std::size_t detectors = 0;
  double source_radius = 0.0;
  double detector_radius = 0.0;

  void bind(Options& o, bool with_counts) {
    o.add("size", size, "image side N");
    if (with_counts) {
      o.add("views", views, "projection views over [0, 2 pi)");
      o.add("detectors", detectors, "detectors per view (0 = 2N)");
    }
    o.add("source-radius", source_radius, "source circle radius (0 = 2N)");
    o.add("detector-radius", detector_radius, "detector arc offset beyond the center (0 = 2N)");
  }

  mlr::FanBeamGeometry build() const {
    mlr::FanBeamGeometry g = mlr::FanBeamGeometry::standard(size, views, detectors);
    if (source_radius > 0.0) {
      g.source_radius = source_radius;
      g.half_fan = mlr::FanBeamGeometry::default_half_fan(size, source_radius);
    }
    if (detector_radius > 0.0) g.detector_radius = detector_radius;
    g.validate();
    return g;
  }
};

json geometry_json(const mlr::FanBeamGeometry& g) {
  return {{"n", g.n},
          {"views", g.views},
          {"detectors", g.detectors},
          {"source_radius", g.source_radius},
          {"detector_radius", g.detector_radius},
          {"half_fan", g.half_fan}};
}

struct ProjectCmd {
  Geometry geo;
  std::string input, output, matrix_out;

  void bind(Options& o) {
    geo.bind(o, true);
    o.add("input", input, "phantom PGM (N x N)");
    o.add("output", output, "sinogram (.csv, otherwise raw float64)");
    o.add("matrix-out", matrix_out, "optional Matrix Market export of the system matrix");
  }

  void run(const Options& o) {
    require(input, "--input");
    require(output, "--output");
    const mlr::ImageGrid img = mlr::read_pgm(input);
    if (img.rows() != img.cols()) throw mlr::InvalidArgument("project: the image must be square");
    geo.size = img.rows();
    const mlr::FanBeamGeometry g = geo.build();
    const mlr::SparseOperator a = mlr::build_system_matrix(g);
    mlr::write_sinogram({g.views, g.detectors, mlr::forward_project(a, img)}, output);
    if (!matrix_out.empty()) mlr::write_matrix_market(a, matrix_out);
    write_sidecar(output, "project", o.settings(), {{"geometry", geometry_json(g)}, {"nonzeros", a.nonzeros()}});
  }
};

struct CtCmd {
  Solver solver;
  Geometry geo;
  std::string input, matrix, ref, output, trace_out, init = "random";
  int init_iters = 20;

  void bind(Options& o) {
    solver.mu = 0.01;
    solver.outer = 15;
    solver.inner = 2;
    solver.tol = 1e-6;
    solver.bind(o, false, true);
    geo.bind(o, false);
    o.add("input", input, "sinogram (.csv, otherwise raw float64)");
    o.add("matrix", matrix, "system matrix in Matrix Market format (overrides the geometry)");
    o.add("ref", ref, "ground truth PGM for a PSNR report");
    o.add("output", output, "PGM output");
    o.add("trace-out", trace_out, "CSV trace iter,objective,residual");
    o.add("init", init, "random | lsq");
    o.add("init-iters", init_iters, "CG steps of the lsq start");
  }

  void run(const Options& o) {
    require(input, "--input");
    require(output, "--output");
    const mlr::Sinogram sino = mlr::read_sinogram(input);
    json derived;
    mlr::LinopProblem p;
    if (!matrix.empty()) {
      mlr::SparseOperator a = mlr::read_matrix_market(matrix);
      const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(a.cols()))));
      if (side * side != a.cols()) throw mlr::InvalidArgument("ct: matrix columns are not a square image");
      geo.size = side;
      p.op = mlr::LinearDegradation::from_sparse(std::move(a));
      derived["matrix"] = matrix;
    } else {
      geo.views = sino.views;
      geo.detectors = sino.detectors;
      const mlr::FanBeamGeometry g = geo.build();
      p.op = mlr::LinearDegradation::from_sparse(mlr::build_system_matrix(g));
      derived["geometry"] = geometry_json(g);
    }
    p.g = sino.values;
    p.rows = p.cols = geo.size;
    p.cfg = mlr::PatchConfig::from_patch_size(solver.patch_size, solver.knn);
    p.mu1 = solver.mu;
    p.mu2 = solver.mu2;
    p.outer_iters = solver.outer;
    p.inner_iters = solver.inner;
    p.tol = solver.tol;
    p.cg_max_iter = solver.cg_max_iter;
    p.seed = solver.seed;
    if (init == "lsq") {
      p.init = mlr::LinopInit::LeastSquares;
      p.init_iters = init_iters;
    } else if (init != "random") {
      throw mlr::InvalidArgument("ct: --init must be random or lsq");
    }
    const mlr::LinopResult res = mlr::solve_linop(p);
    mlr::write_pgm(res.image, output);
    write_trace(trace_out, res.trace);
    derived["fidelity"] = mlr::relative_fidelity(p.op, res.image.vec(), p.g);
    if (!ref.empty()) {
      const double v = mlr::psnr(res.image, mlr::read_pgm(ref));
      derived["psnr_db"] = psnr_json(v);
      std::cout << "psnr " << psnr_text(v) << " dB\n";
    }
    write_sidecar(output, "ct", o.settings(), derived);
  }
};

// ---------------------------------------------------------------- SSL

struct SslCmd {
  std::string input, labels, output, report, rank_out;
  std::size_t subset = 2000, labeled = 20, classes = 10, knn = 15;
  double mu = 1.0;
  int outer = 3, inner = 30;
  std::uint64_t seed = 0;

  void bind(Options& o) {
    o.add("input", input, "IDX image file");
    o.add("labels", labels, "IDX label file");
    o.add("subset", subset, "images drawn from the file (0 = all)");
    o.add("labeled", labeled, "labeled points drawn from the subset");
    o.add("classes", classes, "number of classes");
    o.add("knn", knn, "nearest neighbours K");
    o.add("mu", mu, "ADMM weight; SVT threshold 1/mu");
    o.add("outer", outer, "re-encoding rounds (stops early when labels repeat)");
    o.add("inner", inner, "sweeps per round");
    o.add("seed", seed, "random seed for the subset and the labeled draw");
    o.add("output", output, "CSV index,label");
    o.add("report", report, "CSV n,labeled,correct,accuracy");
    o.add("rank-out", rank_out, "CSV rank,count of local blocks at exit");
  }

  void run(const Options& o) const {
    require(input, "--input");
    require(labels, "--labels");
    require(output, "--output");
    const mlr::LabeledCloud data = mlr::idx_subset(mlr::read_idx(input), mlr::read_idx(labels), subset, seed);
    for (int t : data.truth)
      if (t < 0 || static_cast<std::size_t>(t) >= classes) throw mlr::InvalidArgument("ssl: label outside --classes");
    const mlr::LabelAssignment lab = mlr::draw_labels(data.truth, labeled, classes, seed + 1);
    const auto missing = lab.missing_classes();
    if (!missing.empty()) std::cerr << "warning: " << missing.size() << " classes have no labeled example\n";
    mlr::SslParams p;
    p.k = knn;
    p.mu = mu;
    p.outer_iters = outer;
    p.inner_iters = inner;
    const mlr::SslResult res = mlr::solve_ssl(data.cloud, lab, p);

    {
      std::ofstream os(output);
      if (!os) throw mlr::InvalidArgument("cannot open " + output);
      os << "index,label\n";
      for (std::size_t i = 0; i < res.labels.size(); ++i) os << data.source[i] << ',' << res.labels[i] << '\n';
    }
    const std::size_t n = res.labels.size();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) correct += res.labels[i] == data.truth[i];
    const double acc = static_cast<double>(correct) / static_cast<double>(n);
    const double acc0 = mlr::accuracy(res.initial, data.truth);
    if (!report.empty()) {
      std::ofstream os(report);
      if (!os) throw mlr::InvalidArgument("cannot open " + report);
      os << "n,labeled,correct,accuracy\n" << n << ',' << lab.indices.size() << ',' << correct << ',' << acc << '\n';
    }
    json hist = json::object();
    for (auto [r, c] : res.rank_hist) hist[std::to_string(r)] = c;
    if (!rank_out.empty()) {
      std::ofstream os(rank_out);
      if (!os) throw mlr::InvalidArgument("cannot open " + rank_out);
      os << "rank,count\n";
      for (auto [r, c] : res.rank_hist) os << r << ',' << c << '\n';
    }
    std::cout << "accuracy " << acc << " (nearest-label start " << acc0 << ")\n";
    write_sidecar(output, "ssl", o.settings(),
                  {{"n", n},
                   {"labeled", lab.indices.size()},
                   {"labeled_indices", lab.indices},
                   {"accuracy", acc},
                   {"initial_accuracy", acc0},
                   {"outer_done", res.outer_done},
                   {"converged", res.converged},
                   {"rank_histogram", hist}});
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Manifold low-rank image restoration and label completion"};
  app.require_subcommand(1);

  PhantomCmd phantom;
  MaskCmd mask;
  PsnrCmd psnr;
  InpaintCmd inpaint;
  SuperresCmd superres;
  ProjectCmd project;
  CtCmd ct;
  SslCmd ssl;

  auto* c_phantom = app.add_subcommand("phantom", "synthetic test image");
  auto* c_mask = app.add_subcommand("mask", "random or grid mask");
  auto* c_psnr = app.add_subcommand("psnr", "PSNR against a reference");
  auto* c_inpaint = app.add_subcommand("inpaint", "fill unknown pixels");
  auto* c_superres = app.add_subcommand("superres", "upsample by grid completion or inverse averaging");
  auto* c_project = app.add_subcommand("project", "fan-beam forward projection");
  auto* c_ct = app.add_subcommand("ct", "reconstruct from a fan-beam sinogram");
  auto* c_ssl = app.add_subcommand("ssl", "semi-supervised labels on IDX images");

  Options o_phantom(c_phantom), o_mask(c_mask), o_psnr(c_psnr), o_inpaint(c_inpaint), o_superres(c_superres),
      o_project(c_project), o_ct(c_ct), o_ssl(c_ssl);
  phantom.bind(o_phantom);
  mask.bind(o_mask);
  psnr.bind(o_psnr);
  inpaint.bind(o_inpaint);
  superres.bind(o_superres);
  project.bind(o_project);
  ct.bind(o_ct);
  ssl.bind(o_ssl);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (c_phantom->parsed()) o_phantom.apply_config(), phantom.run(o_phantom);
    if (c_mask->parsed()) o_mask.apply_config(), mask.run(o_mask);
    if (c_psnr->parsed()) o_psnr.apply_config(), psnr.run(o_psnr);
    if (c_inpaint->parsed()) o_inpaint.apply_config(), inpaint.run(o_inpaint);
    if (c_superres->parsed()) o_superres.apply_config(), superres.run(o_superres);
    if (c_project->parsed()) o_project.apply_config(), project.run(o_project);
    if (c_ct->parsed()) o_ct.apply_config(), ct.run(o_ct);
    if (c_ssl->parsed()) o_ssl.apply_config(), ssl.run(o_ssl);
  } catch (const mlr::FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kFormat;
  } catch (const mlr::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kInvalid;
  } catch (const mlr::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnexpected;
  }
  return kOk;
}
