// Command line front end: each subcommand drives one reproducible
// experiment over the CIMG1/MASK1/DNET1 formats plus CSV reports. Every
// stochastic command takes a --seed flag and replays bit-identically.

#include <dured/evaluation.hpp>
#include <dured/fft.hpp>
#include <dured/io.hpp>
#include <dured/phantom.hpp>
#include <dured/red_solver.hpp>
#include <dured/rng.hpp>
#include <dured/sampling.hpp>
#include <dured/unrolled.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace dured;

// Flat key=value configuration: values are injected as subcommand flags
// before parsing, so anything given explicitly on the command line wins.
std::vector<std::string> apply_config_file(const std::vector<std::string>& args,
                                           const CLI::App& app) {
    // locate the subcommand and a --config argument
    std::size_t sub_pos = std::string::npos;
    const CLI::App* sub = nullptr;
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (!sub && !args[i].empty() && args[i][0] != '-') {
            for (const auto* s : app.get_subcommands({}))
                if (s->get_name() == args[i]) {
                    sub = s;
                    sub_pos = i;
                    break;
                }
            continue;
        }
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (!sub || config_path.empty()) return args;

    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config file " + config_path);

    auto given = [&](const std::string& name) {
        for (std::size_t i = sub_pos + 1; i < args.size(); ++i)
            if (args[i] == name || args[i].rfind(name + "=", 0) == 0) return true;
        return false;
    };

    std::vector<std::string> out = args;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) +
                                     " is not key=value: " + line);
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "config") continue;
        const std::string flag = "--" + key;
        const CLI::Option* opt = nullptr;
        for (const auto* o : sub->get_options())
            if (o->check_name(flag)) {
                opt = o;
                break;
            }
        if (!opt)
            throw std::runtime_error("config key '" + key + "' is not an option of '" +
                                     sub->get_name() + "'");
        if (given(flag)) continue; // command line overrides the file
        if (opt->get_expected_min() == 0) {
            if (value == "1" || value == "true" || value == "yes" || value == "on")
                out.push_back(flag);
        } else {
            out.push_back(flag);
            out.push_back(value);
        }
    }
    return out;
}

// The config path is consumed by apply_config_file; the option exists so the
// parser accepts (and documents) the flag.
std::string g_config_path;

void add_config_opt(CLI::App* cmd) {
    cmd->add_option("--config", g_config_path,
                    "Flat key=value configuration file; flags override file values");
}

std::filesystem::path with_index(const std::filesystem::path& base, int index) {
    std::filesystem::path p = base;
    const std::string stem = p.stem().string();
    const std::string ext = p.extension().string();
    char buf[16];
    std::snprintf(buf, sizeof(buf), "_%03d", index);
    p.replace_filename(stem + buf + ext);
    return p;
}

PhaseMode parse_phase(const std::string& s) {
    if (s == "none") return PhaseMode::none;
    if (s == "smooth") return PhaseMode::smooth;
    throw CLI::ValidationError("--phase", "must be 'none' or 'smooth'");
}

DimMode parse_dim(const std::string& s) {
    if (s == "2d") return DimMode::full_2d;
    if (s == "1d") return DimMode::rows_1d;
    throw CLI::ValidationError("--dim", "must be '2d' or '1d'");
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t comma = s.find(',', pos);
        if (comma == std::string::npos) comma = s.size();
        out.push_back(std::stod(s.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return out;
}

// ---------------------------------------------------------------- size flags

struct SizeFlags {
    int size = 64;
    int height = 0, width = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--size", size, "Square grid size")->check(CLI::PositiveNumber);
        cmd->add_option("--height", height, "Grid height (overrides --size)");
        cmd->add_option("--width", width, "Grid width (overrides --size)");
    }
    int h() const { return height > 0 ? height : size; }
    int w() const { return width > 0 ? width : size; }
};

struct PdfFlags {
    double mu = 0.25;
    double alpha = 2.0;
    double p_min = 1e-4;
    std::string dim = "2d";

    void attach(CLI::App* cmd) {
        cmd->add_option("--mu", mu, "Sampling PDF radius scale")->check(CLI::PositiveNumber);
        cmd->add_option("--alpha", alpha, "Sampling PDF decay exponent")->check(CLI::PositiveNumber);
        cmd->add_option("--pmin", p_min, "Probability floor (weight cap 1/pmin)");
        cmd->add_option("--dim", dim, "Sampling mode: 2d or 1d (whole rows)");
    }
    SamplingPDF pdf(int h, int w) const {
        SamplingPDF p;
        p.mu = mu;
        p.alpha = alpha;
        p.p_min = p_min;
        p.dim_mode = parse_dim(dim);
        p.height = h;
        p.width = w;
        p.validate();
        return p;
    }
};

struct NetFlags {
    int modules = 2;
    int cg_iters = 15;
    double lambda_init = 10.0;
    double beta_init = 10.0;
    int layers = 4;
    int hidden = 16;
    int kernel = 3;
    bool no_share = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--modules", modules, "Unrolled module count");
        cmd->add_option("--cg-iters", cg_iters, "Inner CG iterations per module");
        cmd->add_option("--lambda-init", lambda_init, "Initial lambda");
        cmd->add_option("--beta-init", beta_init, "Initial beta");
        cmd->add_option("--net-layers", layers, "Conv layers in Z_w");
        cmd->add_option("--net-hidden", hidden, "Hidden channels in Z_w");
        cmd->add_option("--net-kernel", kernel, "Conv kernel size");
        cmd->add_flag("--no-share", no_share, "Per-module denoiser copies");
    }
    DuredConfig config() const {
        DuredConfig cfg;
        cfg.n_modules = modules;
        cfg.cg_iters = cg_iters;
        cfg.lambda_init = lambda_init;
        cfg.beta_init = beta_init;
        cfg.net.layers = layers;
        cfg.net.hidden_channels = hidden;
        cfg.net.kernel_size = kernel;
        cfg.share_net = !no_share;
        return cfg;
    }
};

struct DenoiserFlags {
    std::string kind = "gaussian";
    double sigma = 1.0;
    int window = 3;
    std::string weights; // DNET1 path for kind=net

    void attach(CLI::App* cmd) {
        cmd->add_option("--denoiser", kind, "gaussian | median | identity | net");
        cmd->add_option("--sigma", sigma, "Gaussian blur sigma (pixels)");
        cmd->add_option("--window", window, "Median window size (odd)");
        cmd->add_option("--weights", weights, "DNET1 weights (for --denoiser net)");
    }
};

// Owns the net backing a residual denoiser so the Denoiser pointer stays valid.
struct DenoiserHandle {
    Denoiser f;
    ResidualConvNet net;
};

DenoiserHandle make_denoiser(const DenoiserFlags& flags) {
    DenoiserHandle h;
    if (flags.kind == "gaussian") {
        h.f = Denoiser::gaussian(flags.sigma);
    } else if (flags.kind == "median") {
        h.f = Denoiser::median_filter(flags.window);
    } else if (flags.kind == "identity") {
        h.f = Denoiser::identity();
    } else if (flags.kind == "net") {
        if (flags.weights.empty())
            throw CLI::ValidationError("--denoiser", "net requires --weights");
        io::Checkpoint ckpt = io::read_weights(flags.weights);
        h.net = ckpt.params.nets.at(0);
        h.f = Denoiser::residual(nullptr); // pointer fixed below
    } else {
        throw CLI::ValidationError("--denoiser", "unknown kind '" + flags.kind + "'");
    }
    if (flags.kind == "net") h.f.net = &h.net;
    return h;
}

void maybe_export_pgm(const std::string& pgm, const ComplexImage& img) {
    if (!pgm.empty()) io::export_viewable(img, pgm);
}

std::vector<ComplexImage> load_or_generate_phantoms(const std::string& list_file, int h, int w,
                                                    int n, std::uint64_t seed) {
    if (list_file.empty()) return phantom_variants(h, w, n, seed);
    std::ifstream in(list_file);
    if (!in) throw std::runtime_error("cannot open image list " + list_file);
    std::vector<ComplexImage> imgs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        imgs.push_back(io::read_image(line));
    }
    if (imgs.empty()) throw std::runtime_error("image list " + list_file + " is empty");
    return imgs;
}

// ----------------------------------------------------------------- commands

void cmd_phantom(const SizeFlags& size, const std::string& phase, int variants,
                 std::uint64_t seed, bool seed_given, double jitter,
                 const std::string& out, const std::string& pgm) {
    if (variants <= 1) {
        ComplexImage img = shepp_logan(size.h(), size.w(), parse_phase(phase));
        io::write_image(out, img);
        maybe_export_pgm(pgm, img);
        return;
    }
    if (!seed_given)
        throw CLI::ValidationError("--variants", "requires --seed");
    auto imgs = phantom_variants(size.h(), size.w(), variants, seed, parse_phase(phase), jitter);
    for (int i = 0; i < variants; ++i)
        io::write_image(with_index(out, i), imgs[i]);
    if (!pgm.empty()) io::export_viewable(imgs[0], pgm);
}

void cmd_mask(const SizeFlags& size, const PdfFlags& pdf_flags, std::uint64_t seed,
              const std::string& out) {
    SamplingPDF pdf = pdf_flags.pdf(size.h(), size.w());
    MaskDraw draw = draw_mask(pdf, seed);
    io::write_mask(out, draw);
    std::cout << "acceleration=" << io::fmt_double(acceleration_factor(draw)) << "\n";
}

void cmd_sample(const std::string& image, const std::string& mask, const std::string& out,
                const std::string& zf_out, const std::string& pgm) {
    ComplexImage x = io::read_image(image);
    ForwardModel A = make_forward_model(io::read_mask(mask));
    ComplexImage y = apply_forward(A, x);
    io::write_image(out, y);
    if (!zf_out.empty()) {
        ComplexImage zf = apply_adjoint(A, y);
        io::write_image(zf_out, zf);
        maybe_export_pgm(pgm, zf);
    } else {
        maybe_export_pgm(pgm, y);
    }
}

void cmd_recon_red(const std::string& y_path, const std::string& mask,
                   const DenoiserFlags& dflags, double lambda, double beta, int iters,
                   int cg_iters, double cg_tol, bool exact_v, const std::string& out,
                   const std::string& history, const std::string& pgm) {
    ComplexImage y = io::read_image(y_path);
    ForwardModel A = make_forward_model(io::read_mask(mask));
    DenoiserHandle f = make_denoiser(dflags);

    AdmmRedOptions opts;
    opts.lambda = lambda;
    opts.beta = beta;
    opts.n_iters = iters;
    opts.cg_iters = cg_iters;
    opts.cg_tol = cg_tol;
    opts.exact_v_update = exact_v;
    AdmmRedResult res = admm_red(y, A, f.f, opts);

    if (!history.empty()) {
        io::CsvWriter csv(history, {"iter", "primal_residual"});
        for (std::size_t i = 0; i < res.primal_residual.size(); ++i)
            csv.row({std::to_string(i + 1), io::fmt_double(res.primal_residual[i])});
        csv.close();
    }
    if (res.diverged)
        throw std::runtime_error("admm_red diverged (primal residual exceeded 1e6); history " +
                                 std::string(history.empty() ? "not requested" : "written"));
    io::write_image(out, res.x);
    maybe_export_pgm(pgm, res.x);
}

void cmd_train(const SizeFlags& size, const PdfFlags& pdf_flags, const NetFlags& net,
               int n_train, int epochs, int batch_size, double lr, bool no_augment,
               int augment_repeat, std::uint64_t seed, const std::string& images,
               const std::string& out, const std::string& loss_csv) {
    const int h = size.h(), w = size.w();
    SamplingPDF pdf = pdf_flags.pdf(h, w);

    DuredConfig cfg = net.config();
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.adam.lr = lr;
    cfg.augment = !no_augment;
    cfg.augment_repeat = augment_repeat;
    cfg.validate();

    auto phantoms = load_or_generate_phantoms(images, h, w, n_train, mix_seed(seed, 1));
    std::vector<TrainingSample> dataset;
    dataset.reserve(phantoms.size());
    for (std::size_t i = 0; i < phantoms.size(); ++i)
        dataset.push_back(make_training_sample(phantoms[i], pdf, mix_seed(seed, 2 * i + 10),
                                               mix_seed(seed, 2 * i + 11)));

    DuredParams params = DuredParams::init(cfg, mix_seed(seed, 3));
    AdamState adam;
    TrainRecord rec = train(dataset, cfg, params, adam, mix_seed(seed, 4));

    if (!loss_csv.empty()) {
        io::CsvWriter csv(loss_csv, {"epoch", "mean_loss"});
        for (std::size_t e = 0; e < rec.epoch_loss.size(); ++e)
            csv.row({std::to_string(e + 1), io::fmt_double(rec.epoch_loss[e])});
        csv.close();
    }
    if (rec.aborted)
        throw std::runtime_error("training aborted: " + rec.abort_reason);

    io::write_weights(out, io::Checkpoint{cfg, params, adam,
                                          static_cast<int>(rec.epoch_loss.size())});
    if (rec.clamp_events > 0)
        std::cerr << "warning: beta clamped " << rec.clamp_events << " times during training\n";
    if (!rec.epoch_loss.empty())
        std::cout << "final_loss=" << io::fmt_double(rec.epoch_loss.back()) << "\n";
}

void cmd_recon_net(const std::string& y_path, const std::string& mask,
                   const std::string& weights, const std::string& out,
                   const std::string& pgm) {
    ComplexImage y = io::read_image(y_path);
    ForwardModel A = make_forward_model(io::read_mask(mask));
    io::Checkpoint ckpt = io::read_weights(weights);
    ComplexImage x = dured_forward(y, A, ckpt.cfg, ckpt.params);
    io::write_image(out, x);
    maybe_export_pgm(pgm, x);
}

void cmd_eval(const std::string& gt, const std::string& recon, const std::string& csv_path) {
    const double v = nmse(io::read_image(gt), io::read_image(recon));
    std::cout << "nmse=" << io::fmt_double(v) << "\n";
    if (!csv_path.empty()) {
        io::CsvWriter csv(csv_path, {"metric", "value"});
        csv.row({"nmse", io::fmt_double(v)});
        csv.close();
    }
}

void cmd_contour(const std::string& x_path, const std::string& y_path, const std::string& mask,
                 const DenoiserFlags& dflags, double lambda, std::uint64_t seed, double extent,
                 int grid_n, const std::string& out) {
    ComplexImage x_hat = io::read_image(x_path);
    ComplexImage y = io::read_image(y_path);
    ForwardModel A = make_forward_model(io::read_mask(mask));
    DenoiserHandle f = make_denoiser(dflags);

    auto cost = [&](const ComplexImage& x) { return red_cost(x, y, A, f.f, lambda); };
    auto grad = [&](const ComplexImage& x) { return red_gradient(x, y, A, f.f, lambda); };
    ContourGrid grid = contour_grid(x_hat, cost, grad, seed, extent, grid_n);

    io::CsvWriter csv(out, {"a", "b", "cost", "grad_e1", "grad_e2", "valid"});
    for (int ib = 0; ib < grid.n; ++ib)
        for (int ia = 0; ia < grid.n; ++ia) {
            const std::size_t idx = static_cast<std::size_t>(ib) * grid.n + ia;
            csv.row({io::fmt_double(grid.a_values[ia]), io::fmt_double(grid.a_values[ib]),
                     io::fmt_double(grid.cost[idx]), io::fmt_double(grid.grad_e1[idx]),
                     io::fmt_double(grid.grad_e2[idx]), std::to_string(grid.valid[idx])});
        }
    csv.close();
}

void cmd_perturb_stencil(const std::string& image, const std::string& stencil_path,
                         double amplitude, const std::string& out, const std::string& pgm) {
    ComplexImage img = io::read_image(image);
    ComplexImage st = io::read_image(stencil_path);
    if (!st.same_shape(img)) throw std::runtime_error("stencil shape mismatch");
    std::vector<std::uint8_t> stencil(st.size());
    for (int i = 0; i < st.size(); ++i) stencil[i] = st[i].real() > 0.5 ? 1 : 0;
    ComplexImage pert = text_perturbation(img, stencil, amplitude);
    io::write_image(out, pert);
    maybe_export_pgm(pgm, pert);
}

void cmd_perturb_worst(const std::string& image, const std::string& mask,
                       const std::string& recon_kind, const DenoiserFlags& dflags,
                       double lambda, double beta, int iters,
                       int cg_iters, const std::string& budgets_str, int trials,
                       std::uint64_t seed, const std::string& out, const std::string& out_r) {
    ComplexImage gt = io::read_image(image);
    ForwardModel A = make_forward_model(io::read_mask(mask));

    ReconFn recon;
    io::Checkpoint ckpt;
    DenoiserHandle f;
    if (recon_kind == "zf") {
        recon = [&A](const ComplexImage& img) { return apply_adjoint(A, apply_forward(A, img)); };
    } else if (recon_kind == "net") {
        if (dflags.weights.empty()) throw CLI::ValidationError("--recon", "net requires --weights");
        ckpt = io::read_weights(dflags.weights);
        recon = [&](const ComplexImage& img) {
            return dured_forward(apply_forward(A, img), A, ckpt.cfg, ckpt.params);
        };
    } else if (recon_kind == "red") {
        f = make_denoiser(dflags);
        AdmmRedOptions opts;
        opts.lambda = lambda;
        opts.beta = beta;
        opts.n_iters = iters;
        opts.cg_iters = cg_iters;
        recon = [&A, f = std::move(f), opts](const ComplexImage& img) {
            return admm_red(apply_forward(A, img), A, f.f, opts).x;
        };
    } else {
        throw CLI::ValidationError("--recon", "must be zf, red, or net");
    }

    std::vector<double> budgets = parse_list(budgets_str);
    auto curve = worst_case_curve(recon, gt, budgets, trials, seed);
    io::CsvWriter csv(out, {"budget", "degradation"});
    for (const auto& pt : curve)
        csv.row({io::fmt_double(pt.budget), io::fmt_double(pt.degradation)});
    csv.close();

    if (!out_r.empty()) {
        PerturbResult worst = worst_case_perturb(recon, gt, budgets.back(), trials, seed);
        io::write_image(out_r, worst.r);
    }
}

void cmd_study(const SizeFlags& size, const PdfFlags& pdf_flags, const NetFlags& net,
               const std::string& patterns_str, int n_train, int n_test, int epochs,
               int batch_size, double lr, std::uint64_t seed, const std::string& out,
               const std::string& per_image_out) {
    PatternStudyConfig cfg;
    cfg.height = size.h();
    cfg.width = size.w();
    cfg.pdf = pdf_flags.pdf(cfg.height, cfg.width);
    cfg.dured = net.config();
    cfg.dured.epochs = epochs;
    cfg.dured.batch_size = batch_size;
    cfg.dured.adam.lr = lr;
    cfg.dured.augment = false;
    cfg.n_train = n_train;
    cfg.n_test = n_test;

    std::vector<int> counts;
    for (double v : parse_list(patterns_str)) counts.push_back(static_cast<int>(v));
    auto rows = sampling_pattern_study(counts, cfg, seed);

    io::CsvWriter csv(out, {"n_patterns", "mean_test_nmse", "mean_zero_filled_nmse",
                            "final_train_loss"});
    for (const auto& r : rows)
        csv.row({std::to_string(r.n_patterns), io::fmt_double(r.mean_test_nmse),
                 io::fmt_double(r.mean_zero_filled_nmse), io::fmt_double(r.final_train_loss)});
    csv.close();

    if (!per_image_out.empty()) {
        io::CsvWriter per(per_image_out, {"n_patterns", "test_index", "nmse", "zero_filled_nmse"});
        for (const auto& r : rows)
            for (std::size_t j = 0; j < r.per_image_nmse.size(); ++j)
                per.row({std::to_string(r.n_patterns), std::to_string(j),
                         io::fmt_double(r.per_image_nmse[j]),
                         io::fmt_double(r.per_image_zf_nmse[j])});
        per.close();
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unsupervised unrolled reconstruction by regularization-by-denoising"};
    app.require_subcommand(1);

    // phantom
    auto* phantom = app.add_subcommand("phantom", "Generate a Shepp-Logan phantom image");
    SizeFlags ph_size;
    ph_size.attach(phantom);
    std::string ph_phase = "smooth", ph_out, ph_pgm;
    int ph_variants = 1;
    std::uint64_t ph_seed = 0;
    double ph_jitter = 0.1;
    phantom->add_option("--phase", ph_phase, "Phase mode: none | smooth");
    phantom->add_option("--variants", ph_variants, "Number of jittered variants");
    auto* ph_seed_opt = phantom->add_option("--seed", ph_seed, "Variant generation seed");
    phantom->add_option("--jitter", ph_jitter, "Variant jitter amount");
    phantom->add_option("--out", ph_out, "Output CIMG1 path")->required();
    phantom->add_option("--pgm", ph_pgm, "Also export a viewable PGM");
    add_config_opt(phantom);

    // mask
    auto* mask = app.add_subcommand("mask", "Draw a variable-density sampling mask");
    SizeFlags mk_size;
    PdfFlags mk_pdf;
    mk_size.attach(mask);
    mk_pdf.attach(mask);
    std::uint64_t mk_seed = 0;
    std::string mk_out;
    mask->add_option("--seed", mk_seed, "Mask draw seed")->required();
    mask->add_option("--out", mk_out, "Output MASK1 path")->required();
    add_config_opt(mask);

    // sample
    auto* sample = app.add_subcommand("sample", "Measure an image through a mask");
    std::string sm_image, sm_mask, sm_out, sm_zf, sm_pgm;
    sample->add_option("--image", sm_image, "Input CIMG1 image")->required();
    sample->add_option("--mask", sm_mask, "MASK1 sampling mask")->required();
    sample->add_option("--out", sm_out, "Output k-space CIMG1")->required();
    sample->add_option("--zf", sm_zf, "Also write the zero-filled reconstruction");
    sample->add_option("--pgm", sm_pgm, "Viewable PGM of the zero-filled image");
    add_config_opt(sample);

    // recon-red
    auto* rred = app.add_subcommand("recon-red", "ADMM reconstruction with a fixed denoiser");
    std::string rr_y, rr_mask, rr_out, rr_hist, rr_pgm;
    DenoiserFlags rr_den;
    double rr_lambda = 1.0, rr_beta = 4.0, rr_cg_tol = 0.0;
    int rr_iters = 100, rr_cg = 15;
    bool rr_exact = false;
    rred->add_option("--y", rr_y, "Measured k-space CIMG1")->required();
    rred->add_option("--mask", rr_mask, "MASK1 sampling mask")->required();
    rr_den.attach(rred);
    rred->add_option("--lambda", rr_lambda, "Regularization weight");
    rred->add_option("--beta", rr_beta, "Augmented Lagrangian penalty");
    rred->add_option("--iters", rr_iters, "ADMM iterations");
    rred->add_option("--cg-iters", rr_cg, "Inner CG iterations");
    rred->add_option("--cg-tol", rr_cg_tol, "Inner CG relative-residual stop (0 = fixed)");
    rred->add_flag("--exact-v", rr_exact, "Exact v-minimization instead of the residual form");
    rred->add_option("--out", rr_out, "Output CIMG1 reconstruction")->required();
    rred->add_option("--history", rr_hist, "Primal residual CSV");
    rred->add_option("--pgm", rr_pgm, "Viewable PGM");
    add_config_opt(rred);

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the unrolled network on noisy pairs");
    SizeFlags tr_size;
    PdfFlags tr_pdf;
    NetFlags tr_net;
    tr_size.attach(train_cmd);
    tr_pdf.attach(train_cmd);
    tr_net.attach(train_cmd);
    int tr_n = 32, tr_epochs = 100, tr_batch = 8, tr_aug_rep = 1;
    double tr_lr = 1e-3;
    bool tr_no_aug = false;
    std::uint64_t tr_seed = 0;
    std::string tr_images, tr_out, tr_loss;
    train_cmd->add_option("--n-train", tr_n, "Training phantom count");
    train_cmd->add_option("--epochs", tr_epochs, "Training epochs");
    train_cmd->add_option("--batch-size", tr_batch, "Mini-batch size");
    train_cmd->add_option("--lr", tr_lr, "Adam learning rate");
    train_cmd->add_flag("--no-augment", tr_no_aug, "Disable k-space shift augmentation");
    train_cmd->add_option("--augment-repeat", tr_aug_rep, "Shifted copies per sample per epoch");
    train_cmd->add_option("--seed", tr_seed, "Master seed")->required();
    train_cmd->add_option("--images", tr_images, "Text file listing CIMG1 training images");
    train_cmd->add_option("--out", tr_out, "Output DNET1 checkpoint")->required();
    train_cmd->add_option("--loss-csv", tr_loss, "Per-epoch loss CSV");
    add_config_opt(train_cmd);

    // recon-net
    auto* rnet = app.add_subcommand("recon-net", "Reconstruct with a trained unrolled network");
    std::string rn_y, rn_mask, rn_weights, rn_out, rn_pgm;
    rnet->add_option("--y", rn_y, "Measured k-space CIMG1")->required();
    rnet->add_option("--mask", rn_mask, "MASK1 sampling mask")->required();
    rnet->add_option("--weights", rn_weights, "DNET1 checkpoint")->required();
    rnet->add_option("--out", rn_out, "Output CIMG1 reconstruction")->required();
    rnet->add_option("--pgm", rn_pgm, "Viewable PGM");
    add_config_opt(rnet);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Report nMSE of a reconstruction");
    std::string ev_gt, ev_recon, ev_csv;
    eval_cmd->add_option("--gt", ev_gt, "Ground truth CIMG1")->required();
    eval_cmd->add_option("--recon", ev_recon, "Reconstruction CIMG1")->required();
    eval_cmd->add_option("--csv", ev_csv, "Optional CSV report");
    add_config_opt(eval_cmd);

    // contour
    auto* contour = app.add_subcommand("contour", "Cost landscape around a reconstruction");
    std::string ct_x, ct_y, ct_mask, ct_out;
    DenoiserFlags ct_den;
    double ct_lambda = 1.0, ct_extent = 0.1;
    int ct_grid = 21;
    std::uint64_t ct_seed = 0;
    contour->add_option("--x", ct_x, "Reconstruction CIMG1 (grid center)")->required();
    contour->add_option("--y", ct_y, "Measured k-space CIMG1")->required();
    contour->add_option("--mask", ct_mask, "MASK1 sampling mask")->required();
    ct_den.attach(contour);
    contour->add_option("--lambda", ct_lambda, "Regularization weight");
    contour->add_option("--extent", ct_extent, "Half width of the (a, b) lattice");
    contour->add_option("--grid-n", ct_grid, "Lattice size (odd)");
    contour->add_option("--seed", ct_seed, "Direction seed")->required();
    contour->add_option("--out", ct_out, "Output CSV")->required();
    add_config_opt(contour);

    // perturb
    auto* perturb = app.add_subcommand("perturb", "Stencil or worst-case perturbation study");
    std::string pb_mode = "stencil", pb_image, pb_stencil, pb_mask, pb_recon = "zf";
    std::string pb_budgets = "0.5,1,2,4", pb_out, pb_out_r, pb_pgm;
    DenoiserFlags pb_den;
    double pb_amplitude = 0.1, pb_lambda = 1.0, pb_beta = 4.0;
    int pb_iters = 50, pb_cg = 15, pb_trials = 16;
    std::uint64_t pb_seed = 0;
    perturb->add_option("--mode", pb_mode, "stencil | worst");
    perturb->add_option("--image", pb_image, "Input CIMG1 image")->required();
    perturb->add_option("--stencil", pb_stencil, "Stencil CIMG1 (true where real > 0.5)");
    perturb->add_option("--amplitude", pb_amplitude, "Stencil amplitude");
    perturb->add_option("--mask", pb_mask, "MASK1 mask (worst mode)");
    perturb->add_option("--recon", pb_recon, "Worst-mode reconstruction: zf | red | net");
    pb_den.attach(perturb);
    perturb->add_option("--lambda", pb_lambda, "ADMM lambda for --recon red");
    perturb->add_option("--beta", pb_beta, "ADMM beta for --recon red");
    perturb->add_option("--iters", pb_iters, "ADMM iterations for --recon red");
    perturb->add_option("--cg-iters", pb_cg, "Inner CG iterations");
    perturb->add_option("--budgets", pb_budgets, "Ascending L1 budgets, comma separated");
    perturb->add_option("--trials", pb_trials, "Random candidates per budget");
    perturb->add_option("--seed", pb_seed, "Candidate seed");
    perturb->add_option("--out", pb_out, "Output (CIMG1 for stencil, CSV for worst)")->required();
    perturb->add_option("--out-r", pb_out_r, "Worst perturbation CIMG1 (worst mode)");
    perturb->add_option("--pgm", pb_pgm, "Viewable PGM (stencil mode)");
    add_config_opt(perturb);

    // study
    auto* study = app.add_subcommand("study", "Test nMSE vs number of training patterns");
    SizeFlags st_size;
    PdfFlags st_pdf;
    NetFlags st_net;
    st_size.attach(study);
    st_pdf.attach(study);
    st_net.attach(study);
    std::string st_patterns = "2,16", st_out, st_per_image;
    int st_n_train = 16, st_n_test = 4, st_epochs = 50, st_batch = 8;
    double st_lr = 1e-3;
    std::uint64_t st_seed = 0;
    study->add_option("--patterns", st_patterns, "Pattern counts, comma separated");
    study->add_option("--n-train", st_n_train, "Training phantom count");
    study->add_option("--n-test", st_n_test, "Held-out phantom count");
    study->add_option("--epochs", st_epochs, "Training epochs per row");
    study->add_option("--batch-size", st_batch, "Mini-batch size");
    study->add_option("--lr", st_lr, "Adam learning rate");
    study->add_option("--seed", st_seed, "Master seed")->required();
    study->add_option("--out", st_out, "Output CSV")->required();
    study->add_option("--per-image", st_per_image, "Raw per-image nMSE CSV");
    add_config_opt(study);

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = apply_config_file(args, app);
        std::reverse(args.begin(), args.end()); // CLI11 consumes from the back
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (*phantom)
            cmd_phantom(ph_size, ph_phase, ph_variants, ph_seed, ph_seed_opt->count() > 0,
                        ph_jitter, ph_out, ph_pgm);
        else if (*mask)
            cmd_mask(mk_size, mk_pdf, mk_seed, mk_out);
        else if (*sample)
            cmd_sample(sm_image, sm_mask, sm_out, sm_zf, sm_pgm);
        else if (*rred)
            cmd_recon_red(rr_y, rr_mask, rr_den, rr_lambda, rr_beta, rr_iters, rr_cg, rr_cg_tol,
                          rr_exact, rr_out, rr_hist, rr_pgm);
        else if (*train_cmd)
            cmd_train(tr_size, tr_pdf, tr_net, tr_n, tr_epochs, tr_batch, tr_lr, tr_no_aug,
                      tr_aug_rep, tr_seed, tr_images, tr_out, tr_loss);
        else if (*rnet)
            cmd_recon_net(rn_y, rn_mask, rn_weights, rn_out, rn_pgm);
        else if (*eval_cmd)
            cmd_eval(ev_gt, ev_recon, ev_csv);
        else if (*contour)
            cmd_contour(ct_x, ct_y, ct_mask, ct_den, ct_lambda, ct_seed, ct_extent, ct_grid,
                        ct_out);
        else if (*perturb) {
            if (pb_mode == "stencil") {
                if (pb_stencil.empty())
                    throw CLI::ValidationError("--stencil", "required in stencil mode");
                cmd_perturb_stencil(pb_image, pb_stencil, pb_amplitude, pb_out, pb_pgm);
            } else if (pb_mode == "worst") {
                if (pb_mask.empty())
                    throw CLI::ValidationError("--mask", "required in worst mode");
                cmd_perturb_worst(pb_image, pb_mask, pb_recon, pb_den, pb_lambda,
                                  pb_beta, pb_iters, pb_cg, pb_budgets, pb_trials, pb_seed,
                                  pb_out, pb_out_r);
            } else {
                throw CLI::ValidationError("--mode", "must be 'stencil' or 'worst'");
            }
        } else if (*study)
            cmd_study(st_size, st_pdf, st_net, st_patterns, st_n_train, st_n_test, st_epochs,
                      st_batch, st_lr, st_seed, st_out, st_per_image);
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
