#include "matstein/serialize.hpp"

#include <charconv>
#include <cstring>
#include <fstream>

namespace matstein {

namespace {

void write_u64(std::ofstream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::ifstream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void write_f64(std::ofstream& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    write_u64(out, bits);
}

double read_f64(std::ifstream& in) {
    const std::uint64_t bits = read_u64(in);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

}  // namespace

void save_batch_binary(const SampleBatch& batch, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open " + path + " for writing");
    write_u64(out, static_cast<std::uint64_t>(batch.count()));
    write_u64(out, static_cast<std::uint64_t>(batch.nu()));
    write_u64(out, static_cast<std::uint64_t>(batch.d()));
    write_u64(out, batch.seed());
    const Matrix& rows = batch.rows();
    for (Eigen::Index k = 0; k < rows.rows(); ++k)
        for (Eigen::Index a = 0; a < rows.cols(); ++a) write_f64(out, rows(k, a));
    require(out.good(), "write failed for " + path);
}

SampleBatch load_batch_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open " + path);
    const std::uint64_t count = read_u64(in);
    const std::uint64_t nu = read_u64(in);
    const std::uint64_t d = read_u64(in);
    const std::uint64_t seed = read_u64(in);
    require(in.good() && count >= 1 && nu >= 1 && d >= 1, "corrupt batch header in " + path);
    require(nu <= 1024 && d <= 1024 && count <= 100000000ULL,
            "implausible batch header in " + path);
    SampleBatch batch(static_cast<int>(nu), static_cast<int>(d), seed,
                      static_cast<Eigen::Index>(count));
    Matrix& rows = batch.rows();
    for (Eigen::Index k = 0; k < rows.rows(); ++k)
        for (Eigen::Index a = 0; a < rows.cols(); ++a) rows(k, a) = read_f64(in);
    require(in.good(), "truncated batch data in " + path);
    require(rows.allFinite(), "batch data in " + path + " contains non-finite values");
    return batch;
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void save_batch_csv(const SampleBatch& batch, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "cannot open " + path + " for writing");
    for (int i = 0; i < batch.nu(); ++i)
        for (int j = 0; j < batch.d(); ++j)
            out << (i == 0 && j == 0 ? "" : ",") << "x_" << (i + 1) << "_" << (j + 1);
    out << "\n";
    const Matrix& rows = batch.rows();
    for (Eigen::Index k = 0; k < rows.rows(); ++k) {
        for (Eigen::Index a = 0; a < rows.cols(); ++a)
            out << (a == 0 ? "" : ",") << format_double(rows(k, a));
        out << "\n";
    }
    require(out.good(), "write failed for " + path);
}

void save_path_csv(const OUPath& path, int nu, int d, const std::string& out_path) {
    std::ofstream out(out_path);
    require(out.good(), "cannot open " + out_path + " for writing");
    out << "time";
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < d; ++j) out << ",entry_" << (i + 1) << (j + 1);
    out << "\n";
    for (std::size_t k = 0; k < path.times.size(); ++k) {
        out << format_double(path.times[k]);
        const Matrix& x = path.states[k];
        for (int i = 0; i < nu; ++i)
            for (int j = 0; j < d; ++j) out << "," << format_double(x(i, j));
        out << "\n";
    }
    require(out.good(), "write failed for " + out_path);
}

}  // namespace matstein
