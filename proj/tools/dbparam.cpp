// dbparam: command-line front end for disk and square parameterization,
// distortion metrics, geometry images and run reports.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "dbparam/alm.hpp"
#include "dbparam/errors.hpp"
#include "dbparam/geomimage.hpp"
#include "dbparam/mesh.hpp"
#include "dbparam/metrics.hpp"
#include "dbparam/shapes.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace dbparam;

namespace {

constexpr int kExitError = 2;

struct RunConfig
{
    fs::path input;
    fs::path output;
    std::string mode = "balanced";
    std::string shape = "disk";
    double mu = 1.0;
    std::vector<int> corners;
    bool trace = false;
    unsigned seed = 0;
    ALMConfig alm;
    std::string ordering = "amd";

    void validate() const
    {
        if (mu <= 0.0) {
            throw ConfigError("--mu must be positive");
        }
        if (mu != 1.0 && mode != "balanced") {
            throw ConfigError("--mu applies only to --mode balanced");
        }
        if (!corners.empty() && shape != "square") {
            throw ConfigError("--corners applies only to --shape square");
        }
        if (!corners.empty() && corners.size() != 4) {
            throw ConfigError("--corners takes exactly four vertex ids");
        }
        alm.validate();
    }
};

void write_json(const fs::path& path, const json& j)
{
    std::ofstream out(path);
    if (!out) {
        throw IOError("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

json read_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IOError("cannot read " + path.string());
    }
    try {
        return json::parse(in);
    }
    catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw IOError("cannot create directory " + dir.string());
    }
}

TriMesh load_logged(const fs::path& path)
{
    TriMesh mesh = load_mesh(path);
    for (const auto& w : mesh.warnings()) {
        spdlog::warn("{}: {}", path.string(), w);
    }
    spdlog::info("loaded {} ({} vertices, {} faces)", path.string(), mesh.num_vertices(),
                 mesh.num_faces());
    return mesh;
}

// A planar map is stored as an OBJ whose first two coordinates are the image.
PlanarMap load_map(const fs::path& path, const TriMesh& mesh)
{
    const RawMesh raw = read_raw_mesh(path);
    if (raw.vertices.rows() != mesh.num_vertices()) {
        throw ShapeError(fmt::format("{} has {} vertices, mesh has {}", path.string(),
                                     raw.vertices.rows(), mesh.num_vertices()));
    }
    return raw.vertices.leftCols<2>();
}

json stats_json(const Stats& s)
{
    return {{"mean", s.mean}, {"sd", s.sd}, {"min", s.min}, {"max", s.max}, {"count", s.count}};
}

// ---------------------------------------------------------------------------
// param

int cmd_param(const RunConfig& cfg)
{
    cfg.validate();
    const TriMesh mesh = load_logged(cfg.input);
    ensure_dir(cfg.output);

    const Shape shape = cfg.shape == "square" ? Shape::Square : Shape::Disk;
    std::optional<std::array<int, 4>> corners;
    if (!cfg.corners.empty()) {
        corners = std::array<int, 4>{cfg.corners[0], cfg.corners[1], cfg.corners[2], cfg.corners[3]};
    }
    ALMConfig alm = cfg.alm;
    alm.ordering = cfg.ordering == "natural" ? Ordering::Natural : Ordering::ApproximateMinimumDegree;

    spdlog::info("solving mode={} shape={} mu={}", cfg.mode, cfg.shape, cfg.mu);
    const auto start = std::chrono::steady_clock::now();
    SolveResult r;
    if (cfg.mode == "balanced") {
        r = cfg.mu != 1.0 ? solve_weighted(mesh, cfg.mu, shape, alm, corners)
            : shape == Shape::Disk ? solve_disk(mesh, alm)
                                   : solve_square(mesh, corners, alm);
    }
    else if (cfg.mode == "conformal") {
        r = solve_pinned(mesh, 0.0, shape, alm, corners);
    }
    else if (cfg.mode == "authalic") {
        r = solve_pinned(mesh, 1.0, shape, alm, corners);
    }
    else {
        r = solve_fixed_point(mesh, shape, alm, corners);
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const DistortionReport dist = distortion_report(mesh, r.map);
    write_obj(cfg.output / "param.obj", r.map, mesh.faces());
    if (cfg.trace) {
        write_trace_csv(cfg.output / "trace.csv", r.trace);
    }

    json history = json::array();
    for (const OuterRecord& h : r.history) {
        history.push_back({{"k", h.k},
                           {"lambda", h.lambda},
                           {"rho", h.rho},
                           {"omega", h.omega},
                           {"eta", h.eta},
                           {"E_C", h.conformal},
                           {"E_A", h.authalic},
                           {"residual", h.residual},
                           {"grad_norm", h.grad_norm},
                           {"inner_iterations", h.inner_iterations},
                           {"multiplier_update", h.multiplier_update}});
    }
    json summary = {
        {"mesh", cfg.input.stem().string()},
        {"vertices", mesh.num_vertices()},
        {"faces", mesh.num_faces()},
        {"mode", cfg.mode},
        {"shape", cfg.shape},
        {"mu", cfg.mu},
        {"seed", cfg.seed},
        {"lambda", r.state.lambda},
        {"rho", r.state.rho},
        {"outer_iterations", r.outer_iterations},
        {"inner_iterations", r.inner_iterations},
        {"converged", r.converged},
        {"E_D", r.report.E_D},
        {"E_S", r.report.E_S},
        {"E_C", r.report.E_C},
        {"E_A", r.report.E_A},
        {"image_area", r.report.image_area},
        {"residual", r.report.residual},
        {"grad_norm", r.grad_norm},
        {"omega_star", r.omega_star},
        {"lambda_clamp_events", r.state.clamp_events},
        {"foldings", dist.folds},
        {"angle_distortion", stats_json(dist.angle_stats)},
        {"area_distortion", stats_json(dist.area_stats)},
        {"time_seconds", seconds},
        {"history", history},
    };
    if (r.partition) {
        summary["corners"] = r.partition->corners;
    }
    write_json(cfg.output / "summary.json", summary);
    std::cout << summary.dump(2) << '\n';
    spdlog::info("wrote {}", (cfg.output / "summary.json").string());
    return 0;
}

// ---------------------------------------------------------------------------
// metrics

int cmd_metrics(const fs::path& mesh_path, const fs::path& map_path,
                const std::optional<fs::path>& out_dir, int bins)
{
    const TriMesh mesh = load_logged(mesh_path);
    const PlanarMap map = load_map(map_path, mesh);
    const DistortionReport rep = distortion_report(mesh, map);
    json j = json::parse(rep.to_json());
    if (out_dir) {
        ensure_dir(*out_dir);
        write_json(*out_dir / "metrics.json", j);
        write_histogram_csv(*out_dir / "angle_histogram.csv", histogram(rep.angle, bins));
        write_histogram_csv(*out_dir / "area_histogram.csv", histogram(rep.area, bins));
    }
    std::cout << j.dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// geomimage

int cmd_encode(const fs::path& mesh_path, const fs::path& map_path, const fs::path& png,
               int width, int height)
{
    const TriMesh mesh = load_logged(mesh_path);
    const PlanarMap map = load_map(map_path, mesh);
    const GeometryImage img = encode(mesh, map, width, height);
    write_image(img, png);
    const json j = {{"image", png.string()},
                    {"sidecar", sidecar_path(png).string()},
                    {"width", img.width},
                    {"height", img.height}};
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_reconstruct(const fs::path& png, const fs::path& obj)
{
    const GeometryImage img = read_image(png);
    const TriMesh rec = reconstruct(img);
    write_obj(obj, rec.vertices(), rec.faces());
    const ReconstructionMetrics m = reconstruction_metrics(rec);
    json j = {{"mesh", obj.string()}, {"vertices", rec.num_vertices()}, {"faces", rec.num_faces()}};
    j["metrics"] = json::parse(m.to_json());
    std::cout << j.dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// report

struct RunSummary
{
    std::string name;
    json data;
};

RunSummary load_run(const fs::path& p)
{
    if (!fs::exists(p)) {
        throw IOError("no such run " + p.string());
    }
    const fs::path file = fs::is_directory(p) ? p / "summary.json" : p;
    if (!fs::exists(file)) {
        throw EmptyInput("no summary.json in " + p.string());
    }
    const fs::path named = fs::is_directory(p) ? p : p.parent_path();
    return {named.filename().string(), read_json(file)};
}

double field(const json& j, const char* a, const char* b = nullptr)
{
    const json& v = b ? j.at(a).at(b) : j.at(a);
    return v.get<double>();
}

// Columns of the ratio table: label and path into the summary.
const std::vector<std::pair<const char*, const char*>> kRatioFields = {
    {"angle_distortion", "mean"}, {"angle_distortion", "sd"}, {"area_distortion", "mean"},
    {"area_distortion", "sd"},    {"E_C", nullptr},           {"E_A", nullptr},
};

double ratio(double a, double b)
{
    if (b == 0.0) {
        return a == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    }
    return a / b;
}

int cmd_report(const std::vector<fs::path>& runs, const std::vector<fs::path>& versus,
               const std::optional<fs::path>& csv)
{
    std::vector<RunSummary> rows;
    for (const auto& p : runs) {
        rows.push_back(load_run(p));
    }
    std::vector<RunSummary> base;
    for (const auto& p : versus) {
        base.push_back(load_run(p));
    }
    if (!base.empty() && base.size() != 1 && base.size() != rows.size()) {
        throw ConfigError("--versus takes one run or as many runs as compared");
    }

    std::ostringstream table;
    table << fmt::format("{:<20} {:<11} {:<6} {:>5} {:>8} {:>6} {:>11} {:>11} {:>21} {:>21} {:>5} {:>9}\n",
                         "run", "mode", "shape", "mu", "lambda", "iters", "E_C", "E_A",
                         "D_angle mean(sd)", "D_area mean(sd)", "folds", "time_s");
    std::ostringstream out_csv;
    out_csv << "run,mode,shape,mu,lambda,outer_iterations,E_C,E_A,angle_mean,angle_sd,area_mean,"
               "area_sd,foldings,time_seconds\n";
    for (const auto& r : rows) {
        const json& d = r.data;
        table << fmt::format(
            "{:<20} {:<11} {:<6} {:>5.3g} {:>8.4f} {:>6} {:>11.4e} {:>11.4e} {:>10.4f}({:>9.4f}) "
            "{:>10.4f}({:>9.4f}) {:>5} {:>9.3f}\n",
            r.name, d.at("mode").get<std::string>(), d.at("shape").get<std::string>(),
            field(d, "mu"), field(d, "lambda"), d.at("outer_iterations").get<int>(), field(d, "E_C"),
            field(d, "E_A"), field(d, "angle_distortion", "mean"), field(d, "angle_distortion", "sd"),
            field(d, "area_distortion", "mean"), field(d, "area_distortion", "sd"),
            d.at("foldings").get<int>(), field(d, "time_seconds"));
        out_csv << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.name,
                               d.at("mode").get<std::string>(), d.at("shape").get<std::string>(),
                               field(d, "mu"), field(d, "lambda"),
                               d.at("outer_iterations").get<int>(), field(d, "E_C"),
                               field(d, "E_A"), field(d, "angle_distortion", "mean"),
                               field(d, "angle_distortion", "sd"), field(d, "area_distortion", "mean"),
                               field(d, "area_distortion", "sd"), d.at("foldings").get<int>(),
                               field(d, "time_seconds"));
    }
    std::cout << table.str();

    if (!base.empty()) {
        std::cout << "\nratios (run / reference)\n";
        std::cout << fmt::format("{:<20} {:<20}", "run", "reference");
        out_csv << "\nrun,reference";
        for (const auto& [a, b] : kRatioFields) {
            const std::string label = b ? fmt::format("{}_{}", a, b) : a;
            std::cout << fmt::format(" {:>21}", label);
            out_csv << ',' << label;
        }
        std::cout << '\n';
        out_csv << '\n';
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const RunSummary& ref = base.size() == 1 ? base[0] : base[i];
            std::cout << fmt::format("{:<20} {:<20}", rows[i].name, ref.name);
            out_csv << rows[i].name << ',' << ref.name;
            for (const auto& [a, b] : kRatioFields) {
                const double q = ratio(field(rows[i].data, a, b), field(ref.data, a, b));
                std::cout << fmt::format(" {:>21.6f}", q);
                out_csv << ',' << fmt::format("{}", q);
            }
            std::cout << '\n';
            out_csv << '\n';
        }
    }
    if (csv) {
        std::ofstream f(*csv);
        if (!f) {
            throw IOError("cannot write " + csv->string());
        }
        f << out_csv.str();
    }
    return 0;
}

// ---------------------------------------------------------------------------
// generate

int cmd_generate(const std::string& name, const fs::path& out, int resolution)
{
    TriMesh mesh = [&] {
        if (name == "hemisphere") return shapes::bumpy_hemisphere(resolution);
        if (name == "spike") return shapes::spike(resolution);
        if (name == "disk") return shapes::planar_disk(resolution);
        if (name == "grid") return shapes::square_grid(resolution);
        return shapes::square_fan();
    }();
    write_obj(out, mesh.vertices(), mesh.faces());
    const json j = {{"mesh", out.string()}, {"vertices", mesh.num_vertices()}, {"faces", mesh.num_faces()}};
    std::cout << j.dump(2) << '\n';
    return 0;
}

void setup_logging()
{
    auto logger = spdlog::stderr_color_mt("dbparam");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("DBPARAM_LOG_LEVEL")) {
        const auto level = spdlog::level::from_str(env);
        if (level == spdlog::level::off && std::string(env) != "off") {
            spdlog::warn("unknown DBPARAM_LOG_LEVEL '{}'", env);
        }
        else {
            spdlog::set_level(level);
        }
    }
}

void fail(const std::string& category, std::string message)
{
    std::replace(message.begin(), message.end(), '\n', ' ');
    std::cerr << "error: " << category << ": " << message << std::endl;
}

}  // namespace

int main(int argc, char** argv)
{
    setup_logging();

    CLI::App app{"Disk and square parameterization of simplicial surfaces"};
    app.require_subcommand(1);

    RunConfig run;
    auto* param = app.add_subcommand("param", "Parameterize a disk-topology mesh");
    param->add_option("input", run.input, "Input mesh (.obj or .off)")->required();
    param->add_option("output", run.output, "Output directory")->required();
    param->add_option("--mode", run.mode, "Solver mode")
        ->check(CLI::IsMember({"balanced", "conformal", "authalic", "fixed-point"}));
    param->add_option("--shape", run.shape, "Target domain")->check(CLI::IsMember({"disk", "square"}));
    param->add_option("--mu", run.mu, "Weight in the constraint mu*E_A = E_C");
    param->add_option("--corners", run.corners, "Square corner vertex ids, counterclockwise")
        ->expected(4)
        ->delimiter(',');
    param->add_flag("--trace", run.trace, "Write trace.csv with one row per inner iteration");
    param->add_option("--seed", run.seed, "Recorded in the summary");
    param->add_option("--ordering", run.ordering, "Fill-reducing ordering")
        ->check(CLI::IsMember({"amd", "natural"}));
    param->add_option("--max-outer", run.alm.max_outer_iterations);
    param->add_option("--max-inner", run.alm.pcg.max_iterations);
    param->add_option("--eta-star", run.alm.eta_star);
    param->add_option("--omega-star", run.alm.omega_star, "Final gradient tolerance (<= 0: sqrt(dim)*1e-4)");
    param->add_option("--lambda0", run.alm.lambda0);
    param->add_option("--rho0", run.alm.rho0);
    param->add_option("--tau", run.alm.tau);
    param->add_option("--init-lambda", run.alm.init_lambda);
    param->add_option("--init-iterations", run.alm.init_iterations);

    fs::path m_mesh, m_map;
    std::optional<fs::path> m_out;
    int m_bins = 20;
    auto* metrics = app.add_subcommand("metrics", "Distortion of a planar map");
    metrics->add_option("mesh", m_mesh)->required();
    metrics->add_option("map", m_map, "Planar map as OBJ (x, y used)")->required();
    metrics->add_option("--out", m_out, "Directory for metrics.json and histogram CSVs");
    metrics->add_option("--bins", m_bins);

    auto* gi = app.add_subcommand("geomimage", "Geometry images");
    gi->require_subcommand(1);
    fs::path e_mesh, e_map, e_png;
    int e_size = 256, e_width = 0, e_height = 0;
    auto* enc = gi->add_subcommand("encode", "Sample a mesh over a square map");
    enc->add_option("mesh", e_mesh)->required();
    enc->add_option("map", e_map)->required();
    enc->add_option("image", e_png, "Output PNG; the sidecar is written next to it")->required();
    enc->add_option("--size", e_size, "Width and height");
    enc->add_option("--width", e_width);
    enc->add_option("--height", e_height);
    fs::path r_png, r_obj;
    auto* rec = gi->add_subcommand("reconstruct", "Rebuild a mesh from a geometry image");
    rec->add_option("image", r_png)->required();
    rec->add_option("output", r_obj)->required();

    std::vector<fs::path> rep_runs, rep_versus;
    std::optional<fs::path> rep_csv;
    auto* report = app.add_subcommand("report", "Tabulate run summaries");
    report->add_option("runs", rep_runs, "Run directories")->required();
    report->add_option("--versus", rep_versus, "Reference runs for the ratio table");
    report->add_option("--csv", rep_csv);

    std::string g_name;
    fs::path g_out;
    int g_res = 25;
    auto* gen = app.add_subcommand("generate", "Write a synthetic test mesh");
    gen->add_option("name", g_name)
        ->required()
        ->check(CLI::IsMember({"hemisphere", "spike", "disk", "grid", "fan"}));
    gen->add_option("output", g_out)->required();
    gen->add_option("--resolution", g_res, "Rings or grid cells");

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e) {
        fail("UsageError", e.what());
        return kExitError;
    }

    try {
        if (param->parsed()) {
            return cmd_param(run);
        }
        if (metrics->parsed()) {
            return cmd_metrics(m_mesh, m_map, m_out, m_bins);
        }
        if (enc->parsed()) {
            return cmd_encode(e_mesh, e_map, e_png, e_width > 0 ? e_width : e_size,
                              e_height > 0 ? e_height : e_size);
        }
        if (rec->parsed()) {
            return cmd_reconstruct(r_png, r_obj);
        }
        if (report->parsed()) {
            return cmd_report(rep_runs, rep_versus, rep_csv);
        }
        if (gen->parsed()) {
            return cmd_generate(g_name, g_out, g_res);
        }
    }
    catch (const Error& e) {
        fail(e.category(), e.what());
        return kExitError;
    }
    catch (const std::exception& e) {
        fail("InternalError", e.what());
        return kExitError;
    }
    return kExitError;
}
