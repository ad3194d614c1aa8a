#include "rfm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rfm/errors.hpp"

namespace rfm {

namespace {

constexpr char kMagic[8] = {'R', 'F', 'M', 'C', 'K', 'P', 'T', '\0'};

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class U>
U to_le(U v) {
    if constexpr (std::endian::native == std::endian::big) {
        U out = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            out = static_cast<U>((out << 8) | (v & 0xff));
            v = static_cast<U>(v >> 8);
        }
        return out;
    }
    return v;
}

class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) { raw(to_le(v)); }
    void u64(std::uint64_t v) { raw(to_le(v)); }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        buf_.append(s);
    }
    void bytes(const char* p, std::size_t n) { buf_.append(p, n); }
    std::string take() { return std::move(buf_); }

private:
    template <class U>
    void raw(U v) {
        char b[sizeof(U)];
        std::memcpy(b, &v, sizeof(U));
        buf_.append(b, sizeof(U));
    }
    std::string buf_;
};

class Reader {
public:
    explicit Reader(const std::string& s) : s_(s) {}
    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
    std::uint32_t u32() { return to_le(raw<std::uint32_t>()); }
    std::uint64_t u64() { return to_le(raw<std::uint64_t>()); }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const auto n = u32();
        return std::string(take(n), n);
    }
    const char* take(std::size_t n) {
        if (pos_ + n > s_.size()) throw std::runtime_error("checkpoint truncated");
        const char* p = s_.data() + pos_;
        pos_ += n;
        return p;
    }
    bool done() const { return pos_ == s_.size(); }

private:
    template <class U>
    U raw() {
        U v;
        std::memcpy(&v, take(sizeof(U)), sizeof(U));
        return v;
    }
    const std::string& s_;
    std::size_t pos_ = 0;
};

}  // namespace

int FoundationModel::order() const {
    const auto& f = provenance.families;
    if (f.empty()) return 0;
    for (const auto& x : f)
        if (x.order != f.front().order) return 0;
    return f.front().order;
}

std::string encode_checkpoint(const FoundationModel& model) {
    Writer w;
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kCheckpointVersion);

    const auto& a = model.params.arch;
    w.i32(a.input_dim);
    w.i32(a.output_dim);
    w.u8(static_cast<std::uint8_t>(a.activation));
    w.u32(static_cast<std::uint32_t>(a.hidden.size()));
    for (int h : a.hidden) w.i32(h);

    const Eigen::VectorXd flat = flatten(model.params);
    w.u64(static_cast<std::uint64_t>(flat.size()));
    for (Eigen::Index i = 0; i < flat.size(); ++i) w.f64(flat[i]);

    for (const auto& n : model.norms)
        for (const auto& i : n.input) {
            w.f64(i.lo);
            w.f64(i.hi);
        }

    const auto& p = model.provenance;
    w.u32(static_cast<std::uint32_t>(p.families.size()));
    for (const auto& f : p.families) {
        w.u8(static_cast<std::uint8_t>(f.kind));
        w.i32(f.order);
        w.i32(f.count);
    }
    w.u64(p.seed);
    w.str(p.method);
    return w.take();
}

FoundationModel decode_checkpoint(const std::string& bytes) {
    Reader r(bytes);
    if (std::memcmp(r.take(sizeof kMagic), kMagic, sizeof kMagic) != 0) {
        throw std::runtime_error("not a checkpoint file (bad magic)");
    }
    if (const auto v = r.u32(); v != kCheckpointVersion) {
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(v));
    }

    Architecture a;
    a.input_dim = r.i32();
    a.output_dim = r.i32();
    const auto act = r.u8();
    if (act > 1) throw std::runtime_error("unknown activation in checkpoint");
    a.activation = static_cast<Activation>(act);
    a.hidden.resize(r.u32());
    for (int& h : a.hidden) h = r.i32();

    const auto n = r.u64();
    if (n != parameter_count(a)) throw ShapeError("checkpoint parameter count does not match its architecture");
    Eigen::VectorXd flat(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < flat.size(); ++i) flat[i] = r.f64();

    FoundationModel m;
    m.params = unflatten(flat, a);
    for (auto& ns : m.norms)
        for (auto& i : ns.input) {
            i.lo = r.f64();
            i.hi = r.f64();
        }

    auto& p = m.provenance;
    p.families.resize(r.u32());
    for (auto& f : p.families) {
        const auto k = r.u8();
        if (k > 2) throw std::runtime_error("unknown reactor kind in checkpoint");
        f.kind = static_cast<ReactorKind>(k);
        f.order = r.i32();
        f.count = r.i32();
    }
    p.seed = r.u64();
    p.method = r.str();
    if (!r.done()) throw std::runtime_error("trailing bytes after checkpoint");
    return m;
}

void save_checkpoint(const FoundationModel& model, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(model);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw std::runtime_error("failed writing checkpoint " + path.string());
}

FoundationModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingCheckpoint("checkpoint not found: " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return decode_checkpoint(ss.str());
}

}  // namespace rfm
