#include "hlt/numkit/tensor_io.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "hlt/errors.hpp"

namespace hlt::num {

namespace {

constexpr std::array<char, 4> kMagic{'H', 'L', 'T', 'T'};

template <typename U>
void put_le(std::ostream& out, U value) {
    char bytes[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
    out.write(bytes, sizeof(U));
}

template <typename U>
U get_le(std::istream& in) {
    unsigned char bytes[sizeof(U)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) throw CorruptArtifactError("tensor: truncated stream");
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
    return value;
}

}  // namespace

void write_tensor(std::ostream& out, const Tensor& tensor, DType dtype) {
    if (tensor.rank() > 255) throw DimensionError("tensor rank exceeds 255");
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(tensor.rank()));
    for (std::size_t d : tensor.shape()) {
        if (d > 0xffffffffULL) throw DimensionError("tensor dimension exceeds u32");
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    }
    for (double x : tensor.data()) {
        if (dtype == DType::f32) {
            put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
        } else {
            put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x));
        }
    }
    if (!out) throw std::runtime_error("tensor: write failed");
}

Tensor read_tensor(std::istream& in) {
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
        throw CorruptArtifactError("tensor: bad magic bytes");
    }
    const auto dtype = get_le<std::uint8_t>(in);
    if (dtype > 1) throw CorruptArtifactError("tensor: unknown dtype code " + std::to_string(dtype));
    const auto rank = get_le<std::uint8_t>(in);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = get_le<std::uint32_t>(in);
    std::vector<double> data(shape_product(shape));
    for (double& x : data) {
        if (dtype == 0) {
            x = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(in)));
        } else {
            x = std::bit_cast<double>(get_le<std::uint64_t>(in));
        }
    }
    return Tensor(std::move(shape), std::move(data));
}

void save_tensor(const std::filesystem::path& path, const Tensor& tensor, DType dtype) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_tensor(out, tensor, dtype);
}

Tensor load_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorruptArtifactError("missing tensor file " + path.string());
    try {
        return read_tensor(in);
    } catch (const CorruptArtifactError& e) {
        throw CorruptArtifactError(path.string() + ": " + e.what());
    }
}

}  // namespace hlt::num
