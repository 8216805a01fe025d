#include "cornyield/persist.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "cornyield/error.hpp"

namespace cornyield::persist {

namespace {

constexpr std::string_view kModule = "persist";
constexpr std::string_view kCheckpointMagic = "YLDC";
constexpr std::string_view kDatasetMagic = "YLDS";

using nlohmann::json;

[[noreturn]] void fail(ErrorKind kind, const std::string& message) { throw Error(kind, kModule, message); }

class Writer {
public:
    void bytes(std::string_view s) { out_.append(s); }
    void u16(std::uint16_t v) { little(v, 2); }
    void u32(std::uint32_t v) { little(v, 4); }
    void f64(double v) { little(std::bit_cast<std::uint64_t>(v), 8); }
    void str(const std::string& s) {
        if (s.size() > UINT16_MAX) fail(ErrorKind::Shape, "string too long to store");
        u16(static_cast<std::uint16_t>(s.size()));
        bytes(s);
    }
    void block(const std::string& name, std::size_t rows, std::size_t cols, std::span<const double> v) {
        str(name);
        u32(static_cast<std::uint32_t>(rows));
        u32(static_cast<std::uint32_t>(cols));
        for (double x : v) f64(x);
    }
    std::string take() { return std::move(out_); }

private:
    void little(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    std::string out_;
};

class Reader {
public:
    Reader(const std::string& data, std::string source) : data_(data), source_(std::move(source)) {}

    std::string_view bytes(std::size_t n) {
        need(n);
        std::string_view out(data_.data() + pos_, n);
        pos_ += n;
        return out;
    }
    std::uint16_t u16() { return static_cast<std::uint16_t>(little(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(little(4)); }
    double f64() { return std::bit_cast<double>(little(8)); }
    std::string str() { return std::string(bytes(u16())); }

    // Reads a block and checks its name and shape against the expectation.
    void block(const std::string& name, std::size_t rows, std::size_t cols, std::span<double> out) {
        const auto got = str();
        if (got != name) fail(ErrorKind::Shape, source_ + ": expected block " + name + ", found " + got);
        const std::size_t r = u32();
        const std::size_t c = u32();
        if (r != rows || c != cols) {
            fail(ErrorKind::Shape, source_ + ": block " + name + " is " + std::to_string(r) + "x" + std::to_string(c) +
                                       ", layout requires " + std::to_string(rows) + "x" + std::to_string(cols));
        }
        need(8 * rows * cols);
        for (double& x : out) x = f64();
    }

    void finish() const {
        if (pos_ != data_.size()) {
            fail(ErrorKind::Shape, source_ + ": " + std::to_string(data_.size() - pos_) + " trailing bytes");
        }
    }

    const std::string& source() const { return source_; }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) fail(ErrorKind::Truncation, source_ + ": file ends early at byte " + std::to_string(pos_));
    }
    std::uint64_t little(int n) {
        const auto b = bytes(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
        return v;
    }

    const std::string& data_;
    std::string source_;
    std::size_t pos_ = 0;
};

json trend_json(const detrend::TrendModel& t) {
    return {{"kind", std::string(detrend::to_string(t.kind))},
            {"base_year", t.base_year},
            {"rate", t.rate},
            {"gain_pre2000", t.gain_pre2000},
            {"gain_post2000", t.gain_post2000}};
}

detrend::TrendModel trend_from(const json& j) {
    detrend::TrendModel t;
    t.kind = detrend::parse_trend_kind(j.at("kind").get<std::string>());
    t.base_year = j.at("base_year").get<int>();
    t.rate = j.at("rate").get<double>();
    t.gain_pre2000 = j.at("gain_pre2000").get<double>();
    t.gain_post2000 = j.at("gain_post2000").get<double>();
    return t;
}

void write_preamble(Writer& w, std::string_view magic, std::uint16_t version, const json& header) {
    const std::string text = header.dump();
    w.bytes(magic);
    w.u16(version);
    w.u32(static_cast<std::uint32_t>(text.size()));
    w.bytes(text);
}

json read_preamble(Reader& r, std::string_view magic, std::uint16_t version) {
    if (r.bytes(magic.size()) != magic) fail(ErrorKind::Magic, r.source() + ": not a " + std::string(magic) + " file");
    const auto v = r.u16();
    if (v != version) {
        fail(ErrorKind::Version, r.source() + ": unsupported format version " + std::to_string(v) + " (expected " +
                                     std::to_string(version) + ")");
    }
    const auto len = r.u32();
    const auto text = r.bytes(len);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, r.source() + ": bad header: " + e.what());
    }
}

}  // namespace

std::string encode(const Checkpoint& ckpt) {
    lstm::validate(ckpt.model);
    const auto layout = ckpt.model.layout();
    if (ckpt.feature_names.size() != layout.input_size) {
        fail(ErrorKind::Shape, "checkpoint lists " + std::to_string(ckpt.feature_names.size()) +
                                   " feature names for " + std::to_string(layout.input_size) + " inputs");
    }
    const auto& hp = ckpt.hyperparams;
    json header = {
        {"feature_set", ckpt.feature_set},
        {"features", ckpt.feature_names},
        {"time_len", ckpt.time_len},
        {"trend", trend_json(ckpt.trend)},
        {"layout", {{"input_size", layout.input_size}, {"hidden_sizes", layout.hidden_sizes}}},
        {"dropout_rate", ckpt.model.dropout_rate},
        {"hyperparams",
         {{"learning_rate", hp.learning_rate},
          {"hidden_sizes", hp.hidden_sizes},
          {"dropout_rate", hp.dropout_rate},
          {"batch_size", hp.batch_size},
          {"max_epochs", hp.max_epochs},
          {"patience", hp.patience},
          {"seed", hp.seed},
          {"clip_norm", hp.clip_norm}}},
    };

    Writer w;
    write_preamble(w, kCheckpointMagic, kCheckpointVersion, header);
    const auto& p = ckpt.model.params;
    for (std::size_t k = 0; k < p.layers.size(); ++k) {
        const auto& l = p.layers[k];
        const std::string prefix = "layer" + std::to_string(k) + ".";
        w.block(prefix + "U", l.U.rows(), l.U.cols(), l.U.data());
        w.block(prefix + "W", l.W.rows(), l.W.cols(), l.W.data());
        w.block(prefix + "b", l.b.size(), 1, l.b);
    }
    w.block("head.V", 1, p.head_w.size(), p.head_w);
    w.block("head.c", 1, 1, std::span(&p.head_b, 1));
    const auto& n = ckpt.model.norm;
    w.block("norm.feature_mean", 1, n.feature_mean.size(), n.feature_mean);
    w.block("norm.feature_std", 1, n.feature_std.size(), n.feature_std);
    const double target[2] = {n.target_mean, n.target_std};
    w.block("norm.target", 1, 2, target);
    return w.take();
}

Checkpoint decode(const std::string& bytes, const std::string& source) {
    Reader r(bytes, source);
    const json header = read_preamble(r, kCheckpointMagic, kCheckpointVersion);
    Checkpoint ckpt;
    lstm::Layout layout;
    try {
        ckpt.feature_set = header.at("feature_set").get<std::string>();
        ckpt.feature_names = header.at("features").get<std::vector<std::string>>();
        ckpt.time_len = header.at("time_len").get<std::size_t>();
        ckpt.trend = trend_from(header.at("trend"));
        layout.input_size = header.at("layout").at("input_size").get<std::size_t>();
        layout.hidden_sizes = header.at("layout").at("hidden_sizes").get<std::vector<std::size_t>>();
        ckpt.model.dropout_rate = header.at("dropout_rate").get<double>();
        const auto& h = header.at("hyperparams");
        auto& hp = ckpt.hyperparams;
        hp.learning_rate = h.at("learning_rate").get<double>();
        hp.hidden_sizes = h.at("hidden_sizes").get<std::vector<std::size_t>>();
        hp.dropout_rate = h.at("dropout_rate").get<double>();
        hp.batch_size = h.at("batch_size").get<std::size_t>();
        hp.max_epochs = h.at("max_epochs").get<std::size_t>();
        hp.patience = h.at("patience").get<std::size_t>();
        hp.seed = h.at("seed").get<std::uint64_t>();
        hp.clip_norm = h.at("clip_norm").get<double>();
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, source + ": bad header: " + e.what());
    }
    if (layout.input_size == 0 || layout.hidden_sizes.empty() || layout.hidden_sizes.size() > 2 ||
        ckpt.feature_names.size() != layout.input_size) {
        fail(ErrorKind::Shape, source + ": header declares an invalid layout");
    }
    for (auto h : layout.hidden_sizes) {
        if (h == 0 || h > 4096) fail(ErrorKind::Shape, source + ": header declares an invalid hidden size");
    }

    auto& p = ckpt.model.params;
    std::size_t in = layout.input_size;
    for (std::size_t k = 0; k < layout.hidden_sizes.size(); ++k) {
        const std::size_t h = layout.hidden_sizes[k];
        lstm::LayerParams l{Matrix(lstm::kGates * h, in), Matrix(lstm::kGates * h, h),
                            std::vector<double>(lstm::kGates * h)};
        const std::string prefix = "layer" + std::to_string(k) + ".";
        r.block(prefix + "U", l.U.rows(), l.U.cols(), l.U.data());
        r.block(prefix + "W", l.W.rows(), l.W.cols(), l.W.data());
        r.block(prefix + "b", l.b.size(), 1, l.b);
        p.layers.push_back(std::move(l));
        in = h;
    }
    p.head_w.assign(in, 0.0);
    r.block("head.V", 1, in, p.head_w);
    r.block("head.c", 1, 1, std::span(&p.head_b, 1));
    auto& n = ckpt.model.norm;
    n.feature_mean.assign(layout.input_size, 0.0);
    n.feature_std.assign(layout.input_size, 0.0);
    r.block("norm.feature_mean", 1, layout.input_size, n.feature_mean);
    r.block("norm.feature_std", 1, layout.input_size, n.feature_std);
    double target[2];
    r.block("norm.target", 1, 2, target);
    n.target_mean = target[0];
    n.target_std = target[1];
    r.finish();
    lstm::validate(ckpt.model);
    return ckpt;
}

void save(const Checkpoint& ckpt, const std::filesystem::path& path) { write_file_atomic(path, encode(ckpt)); }

Checkpoint load(const std::filesystem::path& path) { return decode(read_file(path), path.string()); }

std::string encode(const Dataset& ds) {
    const std::size_t f = ds.feature_names.size();
    const std::size_t t = ds.samples.empty() ? 0 : ds.samples.front().time_len();
    json header = {{"feature_set", ds.feature_set},
                   {"features", ds.feature_names},
                   {"time_len", t},
                   {"samples", ds.samples.size()},
                   {"trend", trend_json(ds.trend)}};
    Writer w;
    write_preamble(w, kDatasetMagic, kDatasetVersion, header);
    for (const auto& s : ds.samples) {
        if (s.feature_count() != f || s.time_len() != t) fail(ErrorKind::Shape, "sample " + s.key + " has the wrong shape");
        w.str(s.key);
        w.u16(static_cast<std::uint16_t>(s.members.size()));
        for (const auto& m : s.members) w.str(m);
        w.u32(static_cast<std::uint32_t>(s.year));
        w.f64(s.target_adjusted);
        w.block("features", f, t, s.features.data());
    }
    return w.take();
}

Dataset decode_dataset(const std::string& bytes, const std::string& source) {
    Reader r(bytes, source);
    const json header = read_preamble(r, kDatasetMagic, kDatasetVersion);
    Dataset ds;
    std::size_t t = 0, count = 0;
    try {
        ds.feature_set = header.at("feature_set").get<std::string>();
        ds.feature_names = header.at("features").get<std::vector<std::string>>();
        ds.trend = trend_from(header.at("trend"));
        t = header.at("time_len").get<std::size_t>();
        count = header.at("samples").get<std::size_t>();
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, source + ": bad header: " + e.what());
    }
    const std::size_t f = ds.feature_names.size();
    if (count > 0 && (f == 0 || t == 0)) fail(ErrorKind::Shape, source + ": header declares empty samples");
    ds.samples.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Sample s;
        s.key = r.str();
        const auto members = r.u16();
        for (std::size_t m = 0; m < members; ++m) s.members.push_back(r.str());
        s.year = static_cast<int>(r.u32());
        s.target_adjusted = r.f64();
        s.features = Matrix(f, t);
        r.block("features", f, t, s.features.data());
        ds.samples.push_back(std::move(s));
    }
    r.finish();
    return ds;
}

void save(const Dataset& ds, const std::filesystem::path& path) { write_file_atomic(path, encode(ds)); }

Dataset load_dataset(const std::filesystem::path& path) { return decode_dataset(read_file(path), path.string()); }

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(ErrorKind::Io, "cannot rename into " + path.string());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) fail(ErrorKind::Io, "failed reading " + path.string());
    return buf.str();
}

}  // namespace cornyield::persist
