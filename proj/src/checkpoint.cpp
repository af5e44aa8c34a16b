#include "rare/checkpoint.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "rare/error.hpp"

namespace rare {

namespace {

constexpr std::string_view kRareMagic = "rare-checkpoint";
constexpr std::string_view kBprMagic = "bpr-checkpoint";
constexpr int kVersion = 1;

std::string hex(double x) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::hex);
  return std::string(buf, end);
}

void write_values(std::ostream& out, std::string_view key, const std::vector<double>& values) {
  out << key;
  for (double x : values) out << ' ' << hex(x);
  out << '\n';
}

void write_ids(std::ostream& out, std::string_view key, const std::vector<std::string>& ids) {
  out << key << ' ' << ids.size() << '\n';
  for (const auto& id : ids) out << id << '\n';
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string line() {
    std::string s;
    if (!std::getline(in_, s)) throw FormatError("checkpoint truncated");
    return s;
  }

  // Reads "<key> v1 v2 ..." and checks the key and count.
  std::vector<double> values(std::string_view key, std::size_t count) {
    const std::string s = line();
    std::istringstream ss(s);
    std::string got;
    ss >> got;
    if (got != key) throw FormatError("expected '" + std::string(key) + "', got '" + got + "'");
    std::vector<double> out;
    out.reserve(count);
    std::string tok;
    while (ss >> tok) {
      double x = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x,
                                       std::chars_format::hex);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw FormatError("bad number '" + tok + "' in " + std::string(key));
      }
      out.push_back(x);
    }
    if (out.size() != count) {
      throw FormatError(std::string(key) + ": expected " + std::to_string(count) + " values, got " +
                        std::to_string(out.size()));
    }
    return out;
  }

  std::vector<std::string> ids(std::string_view key, std::size_t expected) {
    std::istringstream ss(line());
    std::string got;
    std::size_t count = 0;
    if (!(ss >> got >> count) || got != key) {
      throw FormatError("expected '" + std::string(key) + "' section");
    }
    if (count != 0 && count != expected) throw FormatError(std::string(key) + " count mismatch");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(line());
    return out;
  }

  void expect_end() {
    if (line() != "end") throw FormatError("checkpoint missing 'end' marker");
  }

 private:
  std::istream& in_;
};

void check_magic(Reader& reader, std::string_view magic) {
  std::istringstream ss(reader.line());
  std::string got;
  int version = 0;
  ss >> got >> version;
  if (got != magic) throw FormatError("not a " + std::string(magic) + " file");
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
}

}  // namespace

void save_checkpoint(std::ostream& out, const RareModel& model,
                     const std::vector<std::string>& user_ids,
                     const std::vector<std::string>& item_ids) {
  out << kRareMagic << ' ' << kVersion << '\n';
  out << "dims " << model.num_users() << ' ' << model.num_items() << ' ' << model.k() << ' '
      << to_string(model.mode()) << '\n';
  const auto& params = model.params();
  write_values(out, "reference", params.reference);
  for (std::size_t p = 0; p < kNumPtParams; ++p) {
    const std::string name(to_string(static_cast<PtParam>(p)));
    const auto& t = params.theta[p];
    write_values(out, name + ".global", {t.global_bias});
    write_values(out, name + ".user_bias", t.user_bias);
    write_values(out, name + ".item_bias", t.item_bias);
    write_values(out, name + ".user_factors", t.user_factors.data());
    write_values(out, name + ".item_factors", t.item_factors.data());
  }
  write_ids(out, "user_ids", user_ids);
  write_ids(out, "item_ids", item_ids);
  out << "end\n";
}

RareCheckpoint load_rare_checkpoint(std::istream& in) {
  Reader reader(in);
  check_magic(reader, kRareMagic);
  std::istringstream dims(reader.line());
  std::string key, mode;
  std::size_t n = 0, m = 0, k = 0;
  if (!(dims >> key >> n >> m >> k >> mode) || key != "dims") {
    throw FormatError("bad dims line");
  }
  AblationMode parsed_mode;
  try {
    parsed_mode = parse_ablation_mode(mode);
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  RareCheckpoint ck{RareModel(n, m, k, parsed_mode), {}, {}};
  auto& params = ck.model.params();
  params.reference = reader.values("reference", n);
  for (std::size_t p = 0; p < kNumPtParams; ++p) {
    const std::string name(to_string(static_cast<PtParam>(p)));
    auto& t = params.theta[p];
    t.global_bias = reader.values(name + ".global", 1).front();
    t.user_bias = reader.values(name + ".user_bias", n);
    t.item_bias = reader.values(name + ".item_bias", m);
    t.user_factors.data() = reader.values(name + ".user_factors", n * k);
    t.item_factors.data() = reader.values(name + ".item_factors", m * k);
  }
  ck.user_ids = reader.ids("user_ids", n);
  ck.item_ids = reader.ids("item_ids", m);
  reader.expect_end();
  return ck;
}

void save_checkpoint(std::ostream& out, const BprModel& model,
                     const std::vector<std::string>& user_ids,
                     const std::vector<std::string>& item_ids) {
  out << kBprMagic << ' ' << kVersion << '\n';
  out << "dims " << model.num_users() << ' ' << model.num_items() << ' ' << model.k() << '\n';
  write_values(out, "user_factors", model.user_factors.data());
  write_values(out, "item_factors", model.item_factors.data());
  write_values(out, "item_bias", model.item_bias);
  write_ids(out, "user_ids", user_ids);
  write_ids(out, "item_ids", item_ids);
  out << "end\n";
}

BprCheckpoint load_bpr_checkpoint(std::istream& in) {
  Reader reader(in);
  check_magic(reader, kBprMagic);
  std::istringstream dims(reader.line());
  std::string key;
  std::size_t n = 0, m = 0, k = 0;
  if (!(dims >> key >> n >> m >> k) || key != "dims") throw FormatError("bad dims line");
  BprCheckpoint ck{BprModel(n, m, k), {}, {}};
  ck.model.user_factors.data() = reader.values("user_factors", n * k);
  ck.model.item_factors.data() = reader.values("item_factors", m * k);
  ck.model.item_bias = reader.values("item_bias", m);
  ck.user_ids = reader.ids("user_ids", n);
  ck.item_ids = reader.ids("item_ids", m);
  reader.expect_end();
  return ck;
}

CheckpointKind peek_checkpoint_kind(std::istream& in) {
  std::string magic;
  in >> magic;
  if (magic == kRareMagic) return CheckpointKind::Rare;
  if (magic == kBprMagic) return CheckpointKind::Bpr;
  throw FormatError("unrecognized checkpoint header '" + magic + "'");
}

}  // namespace rare
