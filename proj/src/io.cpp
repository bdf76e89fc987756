#include "aperture/io.hpp"

#include <png.h>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unistd.h>

namespace aperture::io {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

// Non-comment, non-blank lines with their 1-based numbers.
std::vector<std::pair<int, std::string_view>> content_lines(std::string_view text) {
  std::vector<std::pair<int, std::string_view>> out;
  int n = 0;
  for (std::string_view line : split(text, '\n')) {
    ++n;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    out.emplace_back(n, t);
  }
  return out;
}

[[noreturn]] void syntax(const fs::path& path, int line, const std::string& what) {
  throw SyntaxError(path.string() + ":" + std::to_string(line) + ": " + what, line);
}

// ---- PNG ---------------------------------------------------------------

struct RawPng {
  int width = 0;
  int height = 0;
  int channels = 0;  // after stripping alpha: 1 or 3
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;
};

struct ReadCursor {
  const std::string* bytes;
  std::size_t offset;
};

void read_callback(png_structp png, png_bytep out, png_size_t n) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->offset + n > cur->bytes->size()) png_error(png, "truncated PNG data");
  std::memcpy(out, cur->bytes->data() + cur->offset, n);
  cur->offset += n;
}

void write_callback(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), n);
}

void flush_callback(png_structp) {}

// Everything the decoder touches is allocated before setjmp; a libpng error
// longjmps back here and is turned into an exception after cleanup.
bool decode_png(const std::string& bytes, RawPng& raw, std::string& error) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) {
    error = "cannot allocate PNG reader";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  ReadCursor cursor{&bytes, 0};
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    error = "corrupt or unsupported PNG";
    return false;
  }
  png_set_read_fn(png, &cursor, read_callback);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  raw.width = static_cast<int>(png_get_image_width(png, info));
  raw.height = static_cast<int>(png_get_image_height(png, info));
  raw.channels = png_get_channels(png, info);
  raw.bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * static_cast<std::size_t>(raw.height));
  rows.resize(static_cast<std::size_t>(raw.height));
  for (int y = 0; y < raw.height; ++y) rows[y] = buffer.data() + stride * static_cast<std::size_t>(y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t count = static_cast<std::size_t>(raw.width) * raw.height * raw.channels;
  raw.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    raw.samples[i] = raw.bit_depth == 16
                         ? static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1])
                         : buffer[i];
  }
  return true;
}

RawPng load_png(const fs::path& path) {
  const std::string bytes = read_file(path);
  RawPng raw;
  std::string error;
  if (!decode_png(bytes, raw, error)) throw LoadError(path.string() + ": " + error);
  if (raw.channels != 1 && raw.channels != 3)
    throw LoadError(path.string() + ": unsupported PNG channel layout");
  return raw;
}

bool encode_png(const RawPng& raw, std::string& out, std::string& error) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) {
    error = "cannot allocate PNG writer";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    error = "PNG encoding failed";
    return false;
  }
  png_set_write_fn(png, &out, write_callback, flush_callback);
  png_set_IHDR(png, info, static_cast<png_uint_32>(raw.width), static_cast<png_uint_32>(raw.height),
               raw.bit_depth, raw.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t bytes_per = raw.bit_depth == 16 ? 2 : 1;
  const std::size_t stride = static_cast<std::size_t>(raw.width) * raw.channels * bytes_per;
  buffer.resize(stride * static_cast<std::size_t>(raw.height));
  for (std::size_t i = 0; i < raw.samples.size(); ++i) {
    if (bytes_per == 2) {
      buffer[2 * i] = static_cast<png_byte>(raw.samples[i] >> 8);
      buffer[2 * i + 1] = static_cast<png_byte>(raw.samples[i] & 0xff);
    } else {
      buffer[i] = static_cast<png_byte>(raw.samples[i]);
    }
  }
  rows.resize(static_cast<std::size_t>(raw.height));
  for (int y = 0; y < raw.height; ++y) rows[y] = buffer.data() + stride * static_cast<std::size_t>(y);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

void save_png(const fs::path& path, const RawPng& raw) {
  std::string bytes;
  std::string error;
  if (!encode_png(raw, bytes, error)) throw IoError(path.string() + ": " + error);
  write_file_atomic(path, bytes);
}

int check_bit_depth(int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw InvalidArgument("PNG bit depth must be 8 or 16");
  return bit_depth;
}

std::uint16_t quantize(double v, int bit_depth) {
  const double max = bit_depth == 16 ? 65535.0 : 255.0;
  return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * max));
}

// ---- PFM ---------------------------------------------------------------

struct RawPfm {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> samples;  // top-down, interleaved
};

RawPfm load_pfm(const fs::path& path) {
  const std::string bytes = read_file(path);
  std::istringstream in(bytes);
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  if (!in || (magic != "Pf" && magic != "PF") || w <= 0 || h <= 0 || scale == 0.0)
    throw LoadError(path.string() + ": not a portable float map");
  in.get();  // single whitespace before the raster
  RawPfm raw;
  raw.width = w;
  raw.height = h;
  raw.channels = magic == "PF" ? 3 : 1;
  const std::size_t count = static_cast<std::size_t>(w) * h * raw.channels;
  const auto offset = static_cast<std::size_t>(in.tellg());
  if (bytes.size() < offset + count * 4) throw LoadError(path.string() + ": truncated float map");
  const bool little = scale < 0.0;
  raw.samples.resize(count);
  const std::size_t row = static_cast<std::size_t>(w) * raw.channels;
  for (int y = 0; y < h; ++y) {
    for (std::size_t i = 0; i < row; ++i) {
      std::uint32_t u = 0;
      std::memcpy(&u, bytes.data() + offset + (static_cast<std::size_t>(y) * row + i) * 4, 4);
      if (little != (std::endian::native == std::endian::little)) u = __builtin_bswap32(u);
      // File rows run bottom to top.
      raw.samples[static_cast<std::size_t>(h - 1 - y) * row + i] = std::bit_cast<float>(u);
    }
  }
  return raw;
}

void save_pfm(const fs::path& path, const RawPfm& raw) {
  std::string out = (raw.channels == 3 ? "PF\n" : "Pf\n") + std::to_string(raw.width) + " " +
                    std::to_string(raw.height) + "\n-1.0\n";
  const std::size_t row = static_cast<std::size_t>(raw.width) * raw.channels;
  for (int y = raw.height - 1; y >= 0; --y) {
    for (std::size_t i = 0; i < row; ++i) {
      auto u = std::bit_cast<std::uint32_t>(raw.samples[static_cast<std::size_t>(y) * row + i]);
      if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap32(u);
      char b[4];
      std::memcpy(b, &u, 4);
      out.append(b, 4);
    }
  }
  write_file_atomic(path, out);
}

std::map<std::string, KeyValue> key_map(const fs::path& path, const std::set<std::string>& allowed) {
  std::map<std::string, KeyValue> out;
  for (auto& kv : parse_key_values(read_file(path))) {
    if (!allowed.count(kv.key)) syntax(path, kv.line, "unknown key '" + kv.key + "'");
    out.emplace(kv.key, kv);
  }
  return out;
}

double number(const fs::path& path, const KeyValue& kv) {
  try {
    return parse_double(kv.value);
  } catch (const SyntaxError&) {
    syntax(path, kv.line, "'" + kv.key + "' expects a number, got '" + kv.value + "'");
  }
}

const char* spacing_name(BinSpacing s) {
  return s == BinSpacing::linear ? "linear" : "inverse_depth";
}

}  // namespace

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  // Unique per process and call, so concurrent writers never share a temp.
  static std::atomic<unsigned long> counter{0};
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp." + std::to_string(::getpid()) +
                              "." + std::to_string(counter++));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp, ec);
      throw IoError("write failed: " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place: " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw LoadError("read failed: " + path.string());
  return ss.str();
}

std::string sha256_bytes(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw IoError("SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_bytes(read_file(path)); }

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw SyntaxError("not a number: '" + std::string(text) + "'", 0);
  return v;
}

long long parse_int(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  long long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw SyntaxError("not an integer: '" + std::string(text) + "'", 0);
  return v;
}

std::vector<KeyValue> parse_key_values(std::string_view text) {
  std::vector<KeyValue> out;
  std::set<std::string> seen;
  int n = 0;
  for (std::string_view line : split(text, '\n')) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw SyntaxError("line " + std::to_string(n) + ": expected key=value", n);
    KeyValue kv{std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), n};
    if (kv.key.empty()) throw SyntaxError("line " + std::to_string(n) + ": empty key", n);
    if (!seen.insert(kv.key).second)
      throw SyntaxError("line " + std::to_string(n) + ": duplicate key '" + kv.key + "'", n);
    out.push_back(std::move(kv));
  }
  return out;
}

double srgb_to_linear(double v) noexcept {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double v) noexcept {
  v = std::clamp(v, 0.0, 1.0);
  return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

ColorImage read_png_rgb(const fs::path& path) {
  const RawPng raw = load_png(path);
  const double max = raw.bit_depth == 16 ? 65535.0 : 255.0;
  ColorImage out(raw.width, raw.height);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      const std::size_t base = (static_cast<std::size_t>(y) * raw.width + x) * raw.channels;
      for (int c = 0; c < 3; ++c) {
        const std::uint16_t s = raw.samples[base + (raw.channels == 3 ? c : 0)];
        out[c](x, y) = srgb_to_linear(s / max);
      }
    }
  }
  return out;
}

void write_png_rgb(const fs::path& path, const ColorImage& image, int bit_depth) {
  RawPng raw;
  raw.width = image.width();
  raw.height = image.height();
  raw.channels = 3;
  raw.bit_depth = check_bit_depth(bit_depth);
  raw.samples.resize(static_cast<std::size_t>(raw.width) * raw.height * 3);
  for (int y = 0; y < raw.height; ++y)
    for (int x = 0; x < raw.width; ++x)
      for (int c = 0; c < 3; ++c)
        raw.samples[(static_cast<std::size_t>(y) * raw.width + x) * 3 + c] =
            quantize(linear_to_srgb(image[c](x, y)), bit_depth);
  save_png(path, raw);
}

void write_png_gray(const fs::path& path, const ImageD& image, int bit_depth) {
  RawPng raw;
  raw.width = image.width();
  raw.height = image.height();
  raw.channels = 1;
  raw.bit_depth = check_bit_depth(bit_depth);
  raw.samples.resize(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) raw.samples[i] = quantize(image.data()[i], bit_depth);
  save_png(path, raw);
}

ImageD read_depth_png(const fs::path& path, double depth_scale) {
  if (!(depth_scale > 0.0)) throw InvalidArgument("depth_scale must be > 0");
  const RawPng raw = load_png(path);
  if (raw.channels != 1 || raw.bit_depth != 16)
    throw LoadError(path.string() + ": depth PNG must be 16-bit single channel");
  ImageD out(raw.width, raw.height);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = raw.samples[i] / depth_scale;
  return out;
}

void write_depth_png(const fs::path& path, const ImageD& depth, double depth_scale) {
  if (!(depth_scale > 0.0)) throw InvalidArgument("depth_scale must be > 0");
  RawPng raw;
  raw.width = depth.width();
  raw.height = depth.height();
  raw.channels = 1;
  raw.bit_depth = 16;
  raw.samples.resize(depth.size());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const double d = depth.data()[i];
    if (!is_valid_depth(d)) continue;
    const double units = std::round(d * depth_scale);
    if (units > 65535.0)
      throw OutOfRange("depth " + format_double(d) + " m does not fit a 16-bit PNG at scale " +
                       format_double(depth_scale));
    raw.samples[i] = static_cast<std::uint16_t>(units);
  }
  save_png(path, raw);
}

ImageD read_pfm(const fs::path& path) {
  const RawPfm raw = load_pfm(path);
  if (raw.channels != 1) throw LoadError(path.string() + ": expected a single-channel float map");
  ImageD out(raw.width, raw.height);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = raw.samples[i];
  return out;
}

ColorImage read_pfm_rgb(const fs::path& path) {
  const RawPfm raw = load_pfm(path);
  ColorImage out(raw.width, raw.height);
  for (std::size_t i = 0; i < out[0].size(); ++i)
    for (int c = 0; c < 3; ++c)
      out[c].data()[i] = raw.samples[i * raw.channels + (raw.channels == 3 ? c : 0)];
  return out;
}

void write_pfm(const fs::path& path, const ImageD& image) {
  RawPfm raw{image.width(), image.height(), 1, {}};
  raw.samples.assign(image.pixels().begin(), image.pixels().end());
  save_pfm(path, raw);
}

void write_pfm(const fs::path& path, const ColorImage& image) {
  RawPfm raw{image.width(), image.height(), 3, {}};
  raw.samples.resize(image[0].size() * 3);
  for (std::size_t i = 0; i < image[0].size(); ++i)
    for (int c = 0; c < 3; ++c) raw.samples[i * 3 + c] = static_cast<float>(image[c].data()[i]);
  save_pfm(path, raw);
}

Trajectory read_trajectory(const fs::path& path) {
  const std::string text = read_file(path);
  Trajectory t;
  for (const auto& [n, line] : content_lines(text)) {
    const auto tok = tokens(line);
    if (tok.size() != 8) syntax(path, n, "expected 8 fields 'timestamp tx ty tz qx qy qz qw'");
    std::array<double, 8> v{};
    for (std::size_t i = 0; i < 8; ++i) {
      try {
        v[i] = parse_double(tok[i]);
      } catch (const SyntaxError&) {
        syntax(path, n, "field " + std::to_string(i + 1) + " is not a number");
      }
    }
    try {
      t.poses.push_back(Pose::from_quaternion(Eigen::Quaterniond(v[7], v[4], v[5], v[6]),
                                              Eigen::Vector3d(v[1], v[2], v[3]), v[0]));
    } catch (const InvalidArgument& e) {
      syntax(path, n, e.what());
    }
  }
  if (t.poses.empty()) throw EmptyInput(path.string() + ": trajectory has no poses");
  t.validate();
  return t;
}

std::string format_trajectory(const Trajectory& trajectory) {
  std::string out = "# timestamp tx ty tz qx qy qz qw\n";
  for (const Pose& p : trajectory.poses) {
    const Eigen::Quaterniond q = p.quaternion();
    const std::array<double, 8> v{p.timestamp,      p.translation.x(), p.translation.y(),
                                  p.translation.z(), q.x(),            q.y(),
                                  q.z(),             q.w()};
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ' ';
      out += format_double(v[i] == 0.0 ? 0.0 : v[i]);  // no "-0"
    }
    out += '\n';
  }
  return out;
}

void write_trajectory(const fs::path& path, const Trajectory& trajectory) {
  trajectory.validate();
  write_file_atomic(path, format_trajectory(trajectory));
}

PhaseMask read_mask(const fs::path& path) {
  const std::string text = read_file(path);
  const auto lines = content_lines(text);
  if (lines.empty()) throw LoadError(path.string() + ": empty mask file");
  const auto head = tokens(lines[0].second);
  if (head.size() != 2) syntax(path, lines[0].first, "expected header 'grid pitch'");
  long long grid = 0;
  double pitch = 0.0;
  try {
    grid = parse_int(head[0]);
    pitch = parse_double(head[1]);
  } catch (const SyntaxError&) {
    syntax(path, lines[0].first, "expected header 'grid pitch'");
  }
  if (grid < 1 || grid > 4096) syntax(path, lines[0].first, "grid size out of range");
  if (lines.size() != static_cast<std::size_t>(grid) + 1)
    throw LoadError(path.string() + ": expected " + std::to_string(grid) + " rows of heights, found " +
                    std::to_string(lines.size() - 1));
  PhaseMask mask;
  mask.grid_pitch = pitch;
  mask.height_map = ImageD(static_cast<int>(grid), static_cast<int>(grid));
  for (int y = 0; y < grid; ++y) {
    const auto& [n, line] = lines[static_cast<std::size_t>(y) + 1];
    const auto tok = tokens(line);
    if (tok.size() != static_cast<std::size_t>(grid))
      syntax(path, n, "expected " + std::to_string(grid) + " heights");
    for (int x = 0; x < grid; ++x) {
      try {
        mask.height_map(x, y) = parse_double(tok[static_cast<std::size_t>(x)]);
      } catch (const SyntaxError&) {
        syntax(path, n, "height " + std::to_string(x + 1) + " is not a number");
      }
    }
  }
  mask.validate();
  return mask;
}

std::string format_mask(const PhaseMask& mask) {
  std::string out = "# phase mask: grid pitch_m, then grid rows of heights in m\n";
  out += std::to_string(mask.grid()) + " " + format_double(mask.grid_pitch) + "\n";
  for (int y = 0; y < mask.grid(); ++y) {
    for (int x = 0; x < mask.grid(); ++x) {
      if (x) out += ' ';
      out += format_double(mask.height_map(x, y));
    }
    out += '\n';
  }
  return out;
}

void write_mask(const fs::path& path, const PhaseMask& mask) {
  mask.validate();
  write_file_atomic(path, format_mask(mask));
}

DepthBins read_bins(const fs::path& path) {
  const auto kv = key_map(path, {"count", "near", "far", "spacing"});
  for (const char* k : {"count", "near", "far"})
    if (!kv.count(k)) throw LoadError(path.string() + ": missing key '" + k + "'");
  const double count = number(path, kv.at("count"));
  if (count != std::floor(count)) syntax(path, kv.at("count").line, "count must be an integer");
  BinSpacing spacing = BinSpacing::inverse_depth;
  if (auto it = kv.find("spacing"); it != kv.end()) {
    if (it->second.value == "linear") spacing = BinSpacing::linear;
    else if (it->second.value != "inverse_depth")
      syntax(path, it->second.line, "spacing must be inverse_depth or linear");
  }
  return make_depth_bins(static_cast<int>(count), number(path, kv.at("near")),
                         number(path, kv.at("far")), spacing);
}

void write_bins(const fs::path& path, const DepthBins& bins) {
  std::string out = "count=" + std::to_string(bins.count) + "\nnear=" + format_double(bins.near) +
                    "\nfar=" + format_double(bins.far) + "\nspacing=" + spacing_name(bins.spacing) +
                    "\n";
  write_file_atomic(path, out);
}

void write_psf_bank(const fs::path& dir, const PsfBank& bank) {
  if (bank.size() == 0) throw InvalidArgument("PSF bank is empty");
  const int crop = bank.kernel(0, 0).width();
  std::string index = "# PSF bank; kernels.f64 holds little-endian doubles [bin][channel][row][col]\n";
  index += "bins=" + std::to_string(bank.size()) + "\n";
  index += "channels=" + std::to_string(kChannels) + "\n";
  index += "crop=" + std::to_string(crop) + "\n";
  index += "fingerprint=" + std::to_string(bank.fingerprint()) + "\n";
  index += "depths=";
  for (std::size_t b = 0; b < bank.size(); ++b)
    index += (b ? "," : "") + format_double(bank.depth_bins[b]);
  index += "\nwavelengths=";
  for (int c = 0; c < kChannels; ++c)
    index += (c ? "," : "") + format_double(bank.psfs[0][static_cast<std::size_t>(c)].wavelength);
  index += "\n";

  std::string blob;
  blob.reserve(bank.size() * kChannels * static_cast<std::size_t>(crop * crop) * 8);
  for (std::size_t b = 0; b < bank.size(); ++b) {
    for (int c = 0; c < kChannels; ++c) {
      const ImageD& k = bank.kernel(b, c);
      if (k.width() != crop || k.height() != crop)
        throw InvalidArgument("PSF bank kernels differ in size");
      for (double v : k.pixels()) {
        auto u = std::bit_cast<std::uint64_t>(v);
        if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
        char buf[8];
        std::memcpy(buf, &u, 8);
        blob.append(buf, 8);
      }
      // Float previews for external viewers; not read back.
      write_pfm(dir / ("psf_b" + std::to_string(b) + "_c" + std::to_string(c) + ".pfm"), k);
    }
  }
  write_file_atomic(dir / "kernels.f64", blob);
  write_file_atomic(dir / "psf_index.txt", index);
}

PsfBank read_psf_bank(const fs::path& dir) {
  const fs::path index = dir / "psf_index.txt";
  const auto kv = key_map(index, {"bins", "channels", "crop", "fingerprint", "depths", "wavelengths"});
  for (const char* k : {"bins", "channels", "crop", "depths", "wavelengths"})
    if (!kv.count(k)) throw LoadError(index.string() + ": missing key '" + k + "'");
  const auto bins = static_cast<std::size_t>(number(index, kv.at("bins")));
  const int channels = static_cast<int>(number(index, kv.at("channels")));
  const int crop = static_cast<int>(number(index, kv.at("crop")));
  if (channels != kChannels) syntax(index, kv.at("channels").line, "only 3 channels are supported");
  if (crop < 1 || crop % 2 == 0) syntax(index, kv.at("crop").line, "crop must be odd and >= 1");
  std::vector<double> depths;
  for (auto t : split(kv.at("depths").value, ',')) depths.push_back(parse_double(t));
  std::vector<double> waves;
  for (auto t : split(kv.at("wavelengths").value, ',')) waves.push_back(parse_double(t));
  if (depths.size() != bins) syntax(index, kv.at("depths").line, "depth count differs from bins");
  if (waves.size() != static_cast<std::size_t>(kChannels))
    syntax(index, kv.at("wavelengths").line, "expected 3 wavelengths");

  const std::string blob = read_file(dir / "kernels.f64");
  const std::size_t per = static_cast<std::size_t>(crop) * crop;
  if (blob.size() != bins * kChannels * per * 8)
    throw LoadError((dir / "kernels.f64").string() + ": size does not match the index");
  PsfBank bank;
  bank.depth_bins = depths;
  bank.psfs.resize(bins);
  std::size_t off = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    for (int c = 0; c < kChannels; ++c) {
      Psf& p = bank.psfs[b][static_cast<std::size_t>(c)];
      p.depth = depths[b];
      p.wavelength = waves[static_cast<std::size_t>(c)];
      p.kernel = ImageD(crop, crop);
      for (double& v : p.kernel.pixels()) {
        std::uint64_t u = 0;
        std::memcpy(&u, blob.data() + off, 8);
        if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
        v = std::bit_cast<double>(u);
        off += 8;
      }
    }
  }
  if (auto it = kv.find("fingerprint"); it != kv.end() &&
                                        it->second.value != std::to_string(bank.fingerprint()))
    throw LoadError(index.string() + ": kernels do not match the recorded fingerprint");
  return bank;
}

IntrinsicsFile read_intrinsics(const fs::path& path) {
  const auto kv = key_map(path, {"fx", "fy", "cx", "cy", "depth_scale"});
  for (const char* k : {"fx", "fy", "cx", "cy"})
    if (!kv.count(k)) throw LoadError(path.string() + ": missing key '" + k + "'");
  IntrinsicsFile f;
  f.intrinsics = {number(path, kv.at("fx")), number(path, kv.at("fy")), number(path, kv.at("cx")),
                  number(path, kv.at("cy"))};
  if (auto it = kv.find("depth_scale"); it != kv.end()) f.depth_scale = number(path, it->second);
  if (!(f.intrinsics.fx > 0.0)) syntax(path, kv.at("fx").line, "fx must be > 0");
  if (!(f.intrinsics.fy > 0.0)) syntax(path, kv.at("fy").line, "fy must be > 0");
  if (f.depth_scale && !(*f.depth_scale > 0.0))
    throw InvalidArgument(path.string() + ": depth_scale must be > 0");
  return f;
}

void write_intrinsics(const fs::path& path, const IntrinsicsFile& f) {
  std::string out = "fx=" + format_double(f.intrinsics.fx) + "\nfy=" + format_double(f.intrinsics.fy) +
                    "\ncx=" + format_double(f.intrinsics.cx) + "\ncy=" + format_double(f.intrinsics.cy) + "\n";
  if (f.depth_scale) out += "depth_scale=" + format_double(*f.depth_scale) + "\n";
  write_file_atomic(path, out);
}

}  // namespace aperture::io
