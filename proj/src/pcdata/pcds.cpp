#include <bit>
#include <cstring>

#include "pcd/error.hpp"
#include "pcd/pcdata.hpp"

namespace pcd {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xffu));
}

void put_f32(std::string& out, float f) { put(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get(std::string_view what) {
    need(sizeof(T), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  std::string_view take(std::size_t n, std::string_view what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }
  std::size_t size() const { return bytes_.size(); }

 private:
  void need(std::size_t n, std::string_view what) {
    if (pos_ + n > bytes_.size())
      fail(ErrorDomain::format, "truncated PCDS header while reading " + std::string(what) +
                                    ": expected at least " + std::to_string(pos_ + n) +
                                    " bytes, got " + std::to_string(bytes_.size()));
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_pcds(const LabeledDataset& ds) {
  ds.validate();
  std::string out = "PCDS";
  put<std::uint32_t>(out, kPcdsVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ds.class_names.size()));
  for (const auto& name : ds.class_names) {
    require(name.size() <= 0xffff, ErrorDomain::format, "class name longer than 65535 bytes");
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out += name;
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ds.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ds.points_per_cloud()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ds.labels[i]));
    const Matrix& p = ds.clouds[i].points;
    for (Eigen::Index r = 0; r < p.rows(); ++r)
      for (Eigen::Index k = 0; k < 3; ++k) put_f32(out, static_cast<float>(p(r, k)));
  }
  return out;
}

LabeledDataset decode_pcds(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(4, "magic") != "PCDS") fail(ErrorDomain::format, "bad magic: not a PCDS file");
  const auto version = in.get<std::uint32_t>("version");
  if (version != kPcdsVersion)
    fail(ErrorDomain::format, "unsupported PCDS version " + std::to_string(version) +
                                  " (expected " + std::to_string(kPcdsVersion) + ")");
  LabeledDataset ds;
  const auto num_classes = in.get<std::uint32_t>("class count");
  for (std::uint32_t c = 0; c < num_classes; ++c) {
    const auto len = in.get<std::uint16_t>("class name length");
    ds.class_names.emplace_back(in.take(len, "class name"));
  }
  const auto num_items = in.get<std::uint32_t>("item count");
  const auto n = in.get<std::uint32_t>("points per cloud");

  const std::uint64_t item_bytes = 4 + std::uint64_t{n} * 12;
  const std::uint64_t expected = in.pos() + item_bytes * num_items;
  if (expected != in.size())
    fail(ErrorDomain::format, std::string(expected > in.size() ? "truncated" : "oversized") +
                                  " PCDS payload: expected " + std::to_string(expected) +
                                  " bytes, got " + std::to_string(in.size()));

  ds.clouds.reserve(num_items);
  ds.labels.reserve(num_items);
  for (std::uint32_t i = 0; i < num_items; ++i) {
    const auto label = in.get<std::uint32_t>("label");
    Matrix pts(n, 3);
    for (std::uint32_t r = 0; r < n; ++r)
      for (int k = 0; k < 3; ++k)
        pts(r, k) = static_cast<double>(std::bit_cast<float>(in.get<std::uint32_t>("coordinate")));
    ds.push_back(PointCloud(std::move(pts)), static_cast<int>(label));
  }
  try {
    ds.validate();
  } catch (const Error& e) {
    fail(ErrorDomain::format, std::string("invalid PCDS content: ") + e.what());
  }
  return ds;
}

void write_dataset(const LabeledDataset& ds, const std::filesystem::path& path) {
  write_file(path, encode_pcds(ds));
}

LabeledDataset read_dataset(const std::filesystem::path& path) {
  return decode_pcds(read_file(path));
}

}  // namespace pcd
