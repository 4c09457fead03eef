#include "dured/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; byte swapping is not implemented");

namespace dured {
namespace io {
namespace {

void append_doubles(std::string& buf, const double* v, std::size_t n) {
    const std::size_t off = buf.size();
    buf.resize(off + n * sizeof(double));
    std::memcpy(buf.data() + off, v, n * sizeof(double));
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("io: cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

// Splits off the first line (without the newline) and returns the payload
// offset.
std::pair<std::string, std::size_t> header_line(const std::string& data,
                                                const std::filesystem::path& path) {
    const std::size_t nl = data.find('\n');
    if (nl == std::string::npos)
        throw std::runtime_error("io: missing header line in " + path.string());
    return {data.substr(0, nl), nl + 1};
}

std::vector<double> payload_doubles(const std::string& data, std::size_t offset,
                                    std::size_t count, const std::filesystem::path& path) {
    if (data.size() < offset + count * sizeof(double))
        throw std::runtime_error("io: truncated payload in " + path.string());
    std::vector<double> v(count);
    std::memcpy(v.data(), data.data() + offset, count * sizeof(double));
    return v;
}

double parse_double(const std::string& tok) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
        throw std::runtime_error("io: bad numeric field '" + tok + "'");
    return v;
}

long long parse_int(const std::string& tok) {
    long long v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
        throw std::runtime_error("io: bad integer field '" + tok + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& tok) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
        throw std::runtime_error("io: bad unsigned field '" + tok + "'");
    return v;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> toks;
    std::istringstream ss(line);
    std::string t;
    while (ss >> t) toks.push_back(t);
    return toks;
}

// key=value tokens after the magic word
std::string field(const std::vector<std::string>& toks, const std::string& key,
                  const std::filesystem::path& path) {
    const std::string prefix = key + "=";
    for (const auto& t : toks)
        if (t.rfind(prefix, 0) == 0) return t.substr(prefix.size());
    throw std::runtime_error("io: missing header field '" + key + "' in " + path.string());
}

} // namespace

std::string fmt_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("io: double formatting failed");
    return std::string(buf, p);
}

void write_atomic(const std::filesystem::path& path, const std::string& data) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("io: cannot open " + tmp.string() + " for writing");
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        if (!out) throw std::runtime_error("io: short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

// ------------------------------------------------------------------- CIMG1

void write_image(const std::filesystem::path& path, const ComplexImage& img) {
    std::string buf = "CIMG1 " + std::to_string(img.height()) + " " +
                      std::to_string(img.width()) + " c64le\n";
    append_doubles(buf, reinterpret_cast<const double*>(img.data()),
                   static_cast<std::size_t>(img.size()) * 2);
    write_atomic(path, buf);
}

ComplexImage read_image(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    auto [line, offset] = header_line(data, path);
    auto toks = split_ws(line);
    if (toks.size() != 4 || toks[0] != "CIMG1")
        throw std::runtime_error("io: magic mismatch, not a CIMG1 file: " + path.string());
    if (toks[3] != "c64le")
        throw std::runtime_error("io: unsupported dtype '" + toks[3] + "' in " + path.string());
    const int h = static_cast<int>(parse_int(toks[1]));
    const int w = static_cast<int>(parse_int(toks[2]));
    if (h <= 0 || w <= 0) throw std::runtime_error("io: bad dimensions in " + path.string());
    const std::size_t n = static_cast<std::size_t>(h) * w;
    const std::vector<double> v = payload_doubles(data, offset, n * 2, path);
    ComplexImage img(h, w);
    for (std::size_t i = 0; i < n; ++i) img[i] = cplx(v[2 * i], v[2 * i + 1]);
    return img;
}

// ------------------------------------------------------------------- MASK1

void write_mask(const std::filesystem::path& path, const MaskDraw& draw) {
    std::string buf = "MASK1 " + std::to_string(draw.height()) + " " +
                      std::to_string(draw.width()) + " " + fmt_double(draw.pdf.mu) + " " +
                      fmt_double(draw.pdf.alpha) + " " + std::to_string(draw.seed) + " " +
                      (draw.pdf.dim_mode == DimMode::rows_1d ? "1d" : "2d") + " " +
                      fmt_double(draw.pdf.p_min) + "\n";
    buf.append(reinterpret_cast<const char*>(draw.mask.data()), draw.mask.size());
    append_doubles(buf, draw.weights.data(), draw.weights.size());
    write_atomic(path, buf);
}

MaskDraw read_mask(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    auto [line, offset] = header_line(data, path);
    auto toks = split_ws(line);
    if (toks.size() != 8 || toks[0] != "MASK1")
        throw std::runtime_error("io: magic mismatch, not a MASK1 file: " + path.string());

    MaskDraw draw;
    draw.pdf.height = static_cast<int>(parse_int(toks[1]));
    draw.pdf.width = static_cast<int>(parse_int(toks[2]));
    draw.pdf.mu = parse_double(toks[3]);
    draw.pdf.alpha = parse_double(toks[4]);
    draw.seed = parse_u64(toks[5]);
    if (toks[6] == "1d") draw.pdf.dim_mode = DimMode::rows_1d;
    else if (toks[6] == "2d") draw.pdf.dim_mode = DimMode::full_2d;
    else throw std::runtime_error("io: bad dim_mode in " + path.string());
    draw.pdf.p_min = parse_double(toks[7]);
    draw.pdf.validate();

    const std::size_t n = static_cast<std::size_t>(draw.pdf.height) * draw.pdf.width;
    if (data.size() != offset + n + n * sizeof(double))
        throw std::runtime_error("io: bad payload length in " + path.string());
    draw.mask.assign(data.begin() + offset, data.begin() + offset + n);
    for (auto m : draw.mask)
        if (m > 1) throw std::runtime_error("io: bad mask byte in " + path.string());
    draw.weights.resize(n);
    std::memcpy(draw.weights.data(), data.data() + offset + n, n * sizeof(double));
    return draw;
}

// ------------------------------------------------------------------- DNET1

void write_weights(const std::filesystem::path& path, const Checkpoint& ckpt) {
    const DuredConfig& cfg = ckpt.cfg;
    const DuredParams& p = ckpt.params;
    if (static_cast<int>(p.nets.size()) != cfg.net_count())
        throw std::invalid_argument("write_weights: params/config net count mismatch");

    std::string buf = "DNET1";
    buf += " modules=" + std::to_string(cfg.n_modules);
    buf += " cgiters=" + std::to_string(cfg.cg_iters);
    buf += " layers=" + std::to_string(cfg.net.layers);
    buf += " hidden=" + std::to_string(cfg.net.hidden_channels);
    buf += " ksize=" + std::to_string(cfg.net.kernel_size);
    buf += std::string(" nonlin=") +
           (cfg.net.nonlin == Nonlinearity::leaky_relu ? "leaky" : "identity");
    buf += " leak=" + fmt_double(cfg.net.leak);
    buf += std::string(" shared=") + (cfg.share_net ? "1" : "0");
    buf += " lambda=" + fmt_double(p.lambda);
    buf += " beta=" + fmt_double(p.beta);
    buf += std::string(" adam=") + (ckpt.adam ? "1" : "0");
    buf += " epoch=" + std::to_string(ckpt.epoch);
    buf += " step=" + std::to_string(ckpt.adam ? ckpt.adam->step_count : 0);
    buf += "\n";

    for (const auto& net : p.nets)
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            append_doubles(buf, net.weights[l].data.data(), net.weights[l].numel());
            append_doubles(buf, net.biases[l].data.data(), net.biases[l].numel());
        }
    if (ckpt.adam) {
        if (ckpt.adam->m.size() != p.flat_size())
            throw std::invalid_argument("write_weights: adam state size mismatch");
        append_doubles(buf, ckpt.adam->m.data(), ckpt.adam->m.size());
        append_doubles(buf, ckpt.adam->v.data(), ckpt.adam->v.size());
    }
    write_atomic(path, buf);
}

Checkpoint read_weights(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    auto [line, offset] = header_line(data, path);
    auto toks = split_ws(line);
    if (toks.empty() || toks[0] != "DNET1")
        throw std::runtime_error("io: magic mismatch, not a DNET1 file: " + path.string());

    Checkpoint ckpt;
    DuredConfig& cfg = ckpt.cfg;
    cfg.n_modules = static_cast<int>(parse_int(field(toks, "modules", path)));
    cfg.cg_iters = static_cast<int>(parse_int(field(toks, "cgiters", path)));
    cfg.net.layers = static_cast<int>(parse_int(field(toks, "layers", path)));
    cfg.net.hidden_channels = static_cast<int>(parse_int(field(toks, "hidden", path)));
    cfg.net.kernel_size = static_cast<int>(parse_int(field(toks, "ksize", path)));
    const std::string nl = field(toks, "nonlin", path);
    if (nl == "leaky") cfg.net.nonlin = Nonlinearity::leaky_relu;
    else if (nl == "identity") cfg.net.nonlin = Nonlinearity::identity;
    else throw std::runtime_error("io: bad nonlin in " + path.string());
    cfg.net.leak = parse_double(field(toks, "leak", path));
    cfg.share_net = parse_int(field(toks, "shared", path)) != 0;
    const double lambda = parse_double(field(toks, "lambda", path));
    const double beta = parse_double(field(toks, "beta", path));
    const bool has_adam = parse_int(field(toks, "adam", path)) != 0;
    ckpt.epoch = static_cast<int>(parse_int(field(toks, "epoch", path)));
    const long long step = parse_int(field(toks, "step", path));
    cfg.lambda_init = lambda;
    cfg.beta_init = beta;

    ckpt.params = DuredParams::zero_weights(cfg);
    ckpt.params.lambda = lambda;
    ckpt.params.beta = beta;

    std::size_t net_doubles = 0;
    for (const auto& net : ckpt.params.nets) net_doubles += net.param_count();
    const std::size_t flat = ckpt.params.flat_size();
    const std::size_t expected = net_doubles + (has_adam ? 2 * flat : 0);
    if (data.size() != offset + expected * sizeof(double))
        throw std::runtime_error("io: bad payload length in " + path.string());

    const std::vector<double> v = payload_doubles(data, offset, expected, path);
    std::size_t k = 0;
    for (auto& net : ckpt.params.nets)
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            for (auto& x : net.weights[l].data) x = v[k++];
            for (auto& x : net.biases[l].data) x = v[k++];
        }
    if (has_adam) {
        AdamState st = AdamState::zeros(flat);
        st.step_count = step;
        for (auto& x : st.m) x = v[k++];
        for (auto& x : st.v) x = v[k++];
        ckpt.adam = std::move(st);
    }
    return ckpt;
}

// --------------------------------------------------------------------- PGM

void export_viewable(const ComplexImage& img, const std::filesystem::path& path) {
    double max_mag = 0.0;
    for (int i = 0; i < img.size(); ++i)
        max_mag = std::max(max_mag, std::abs(img[i]));
    std::string buf = "P5\n" + std::to_string(img.width()) + " " +
                      std::to_string(img.height()) + "\n255\n";
    buf.reserve(buf.size() + img.size());
    for (int i = 0; i < img.size(); ++i) {
        double g = max_mag > 0.0 ? 255.0 * std::abs(img[i]) / max_mag : 0.0;
        int q = static_cast<int>(std::lround(g));
        q = std::max(0, std::min(255, q));
        buf.push_back(static_cast<char>(static_cast<unsigned char>(q)));
    }
    write_atomic(path, buf);
}

// --------------------------------------------------------------------- CSV

CsvWriter::CsvWriter(std::filesystem::path path, const std::vector<std::string>& header)
    : path_(std::move(path)), columns_(header.size()) {
    if (header.empty()) throw std::invalid_argument("CsvWriter: empty header");
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) buf_ += ',';
        buf_ += header[i];
    }
    buf_ += '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_)
        throw std::invalid_argument("CsvWriter: wrong cell count");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) buf_ += ',';
        buf_ += cells[i];
    }
    buf_ += '\n';
}

void CsvWriter::close() {
    if (closed_) return;
    write_atomic(path_, buf_);
    closed_ = true;
}

CsvWriter::~CsvWriter() {
    try {
        close();
    } catch (...) {
        // destructor must not throw; an explicit close() surfaces errors
    }
}

} // namespace io
} // namespace dured
