#include "accdiff/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

namespace accdiff {

static_assert(std::endian::native == std::endian::little, "tensor files assume a little-endian host");

namespace {

constexpr char kMagic[4] = {'A', 'C', 'C', 'T'};

template <typename T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get(const char* what) {
        if (bytes_.size() - pos_ < sizeof(T)) throw Error(ErrorCode::Format, std::string("truncated header: ") + what);
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::string_view rest() const { return bytes_.substr(pos_); }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::size_t dtype_size(DType dtype) noexcept { return dtype == DType::Float32 ? 4 : 1; }

std::string_view to_string(DType dtype) noexcept { return dtype == DType::Float32 ? "f32" : "u8"; }

std::uint64_t TensorFile::element_count() const noexcept {
    std::uint64_t n = 1;
    for (std::uint64_t d : dims) n *= d;
    return n;
}

std::string encode_tensor(const TensorFile& tensor) {
    const std::uint64_t n = tensor.element_count();
    const std::size_t stored = tensor.dtype == DType::Float32 ? tensor.f32.size() : tensor.u8.size();
    if (stored != n) {
        throw Error(ErrorCode::ShapeMismatch, "tensor payload has " + std::to_string(stored) + " elements, dims imply " +
                                                  std::to_string(n));
    }
    std::string out(kMagic, 4);
    put(out, kTensorFileVersion);
    put(out, static_cast<std::uint32_t>(tensor.dtype));
    put(out, static_cast<std::uint32_t>(tensor.dims.size()));
    for (std::uint64_t d : tensor.dims) put(out, d);
    if (tensor.dtype == DType::Float32) {
        out.append(reinterpret_cast<const char*>(tensor.f32.data()), tensor.f32.size() * sizeof(float));
    } else {
        out.append(reinterpret_cast<const char*>(tensor.u8.data()), tensor.u8.size());
    }
    return out;
}

TensorFile decode_tensor(std::string_view bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw Error(ErrorCode::Format, "bad magic (expected ACCT)");
    }
    Reader rd(bytes.substr(4));
    const auto version = rd.get<std::uint32_t>("version");
    if (version != kTensorFileVersion) {
        throw Error(ErrorCode::Format, "unsupported tensor file version " + std::to_string(version));
    }
    const auto dtype_code = rd.get<std::uint32_t>("dtype");
    if (dtype_code > 1) throw Error(ErrorCode::Format, "unknown dtype code " + std::to_string(dtype_code));
    const auto ndim = rd.get<std::uint32_t>("ndim");
    TensorFile t;
    t.dtype = static_cast<DType>(dtype_code);
    t.dims.reserve(ndim);
    for (std::uint32_t i = 0; i < ndim; ++i) t.dims.push_back(rd.get<std::uint64_t>("dims"));

    std::uint64_t n = 1;
    for (std::uint64_t d : t.dims) {
        if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d) {
            throw Error(ErrorCode::Format, "dims overflow");
        }
        n *= d;
    }
    const std::string_view payload = rd.rest();
    const std::uint64_t expected = n * dtype_size(t.dtype);
    if (payload.size() < expected) throw Error(ErrorCode::Format, "truncated payload");
    if (payload.size() > expected) throw Error(ErrorCode::Format, "trailing bytes after payload");
    if (t.dtype == DType::Float32) {
        t.f32.resize(n);
        std::memcpy(t.f32.data(), payload.data(), expected);
    } else {
        t.u8.assign(payload.begin(), payload.end());
    }
    return t;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw Error(ErrorCode::Io, "write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::Io, "cannot rename into " + path.string());
    }
}

void write_tensor(const std::filesystem::path& path, const TensorFile& tensor) {
    write_file_atomic(path, encode_tensor(tensor));
}

TensorFile read_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_tensor(bytes);
}

TensorFile to_tensor(const Latent3& latent) {
    TensorFile t;
    t.dtype = DType::Float32;
    t.dims = {latent.height(), latent.width(), latent.channels()};
    t.f32.assign(latent.data().begin(), latent.data().end());
    return t;
}

Latent3 to_latent(const TensorFile& tensor) {
    if (tensor.dtype != DType::Float32 || tensor.dims.size() != 3) {
        throw Error(ErrorCode::Format, "expected a rank-3 float32 tensor");
    }
    return Latent3({tensor.dims[0], tensor.dims[1], tensor.dims[2]}, tensor.f32);
}

TensorFile stack_latents(const std::vector<Latent3>& series) {
    TensorFile t;
    t.dtype = DType::Float32;
    if (series.empty()) {
        t.dims = {0, 0, 0, 0};
        return t;
    }
    const Shape3 s = series.front().shape();
    t.dims = {series.size(), s.height, s.width, s.channels};
    t.f32.reserve(series.size() * s.size());
    for (const Latent3& l : series) {
        require_same_shape(series.front(), l, "stack_latents");
        t.f32.insert(t.f32.end(), l.data().begin(), l.data().end());
    }
    return t;
}

}  // namespace accdiff
