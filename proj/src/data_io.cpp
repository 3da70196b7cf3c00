#include "sen/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sen/rng.hpp"

namespace sen {

namespace {

constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw std::runtime_error(path + ": " + msg);
}

[[noreturn]] void fail_row(const std::string& path, long row, const std::string& msg) {
  throw std::runtime_error(path + " row " + std::to_string(row) + ": " + msg);
}

// days since 1970-01-01 for a civil date (Howard Hinnant's algorithm)
long days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

void civil_from_days(long z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long yy = static_cast<long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y = static_cast<int>(yy + (m <= 2));
}

// "YYYY-MM-DD HH:MM" -> minutes since 1970-01-01 00:00
long parse_timestamp(const std::string& s, const std::string& path, long row) {
  int y = 0, mo = 0, da = 0, hh = 0, mi = 0;
  char tail = 0;
  const int got = std::sscanf(s.c_str(), "%d-%d-%d %d:%d%c", &y, &mo, &da, &hh, &mi, &tail);
  if (got != 5 || s.size() != 16) {
    fail_row(path, row, "bad timestamp '" + s + "' (expected YYYY-MM-DD HH:MM)");
  }
  if (mo < 1 || mo > 12 || da < 1 || da > 31 || hh < 0 || hh > 23 || mi < 0 || mi > 59) {
    fail_row(path, row, "timestamp '" + s + "' is out of range");
  }
  return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(da)) * 1440L +
         hh * 60L + mi;
}

std::string format_timestamp(long minutes) {
  long day = minutes / 1440;
  long rem = minutes % 1440;
  if (rem < 0) {
    day -= 1;
    rem += 1440;
  }
  int y = 0;
  unsigned m = 0, d = 0;
  civil_from_days(day, y, m, d);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02ld:%02ld", y, m, d, rem / 60, rem % 60);
  return buf;
}

double parse_value(const std::string& field, const char* name, const std::string& path, long row) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last || field.empty()) {
    fail_row(path, row, std::string(name) + " is not a number ('" + field + "')");
  }
  if (!std::isfinite(v)) {
    fail_row(path, row, std::string(name) + " is not finite");
  }
  if (v < 0.0) {
    fail_row(path, row, std::string(name) + " is negative (" + field + ")");
  }
  return v;
}

}  // namespace

void ExogenousTrace::validate() const {
  if (pv.size() != wind.size() || pv.size() != demand.size()) {
    throw std::runtime_error("trace series have mismatched lengths");
  }
  if (pv.empty()) throw std::runtime_error("trace is empty");
  if (slots() % TariffSchedule::kSlotsPerDay != 0) {
    throw std::runtime_error("trace must cover whole days (" +
                             std::to_string(TariffSchedule::kSlotsPerDay) +
                             " slots each), got " + std::to_string(slots()) + " slots");
  }
  if (!(dt > 0.0)) throw std::runtime_error("trace dt must be positive");
  for (std::size_t i = 0; i < pv.size(); ++i) {
    if (!std::isfinite(pv[i]) || !std::isfinite(wind[i]) || !std::isfinite(demand[i]) ||
        pv[i] < 0.0 || wind[i] < 0.0 || demand[i] < 0.0) {
      throw std::runtime_error("trace values must be finite and non-negative (slot " +
                               std::to_string(i) + ")");
    }
  }
}

ExogenousTrace load_trace(const std::string& path, const TraceSchema& schema) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open file");

  std::string line;
  if (!std::getline(in, line)) fail(path, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != schema.header) {
    fail(path, "header mismatch: expected '" + schema.header + "', got '" + line + "'");
  }

  ExogenousTrace t;
  t.dt = schema.cadence_minutes / 60.0;
  long row = 0;
  long prev_minutes = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;

    std::string fields[4];
    int nf = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (nf < 4) fields[nf] = line.substr(start, i - start);
        ++nf;
        start = i + 1;
      }
    }
    if (nf != 4) {
      fail_row(path, row, "expected 4 comma-separated fields, got " + std::to_string(nf));
    }

    const long minutes = parse_timestamp(fields[0], path, row);
    if (row > 1 && minutes != prev_minutes + schema.cadence_minutes) {
      fail_row(path, row,
               "timestamp '" + fields[0] + "' breaks the " +
                   std::to_string(schema.cadence_minutes) + "-minute cadence (expected '" +
                   format_timestamp(prev_minutes + schema.cadence_minutes) + "')");
    }
    prev_minutes = minutes;

    t.pv.push_back(parse_value(fields[1], "pv_kw", path, row));
    t.wind.push_back(parse_value(fields[2], "wind_kw", path, row));
    t.demand.push_back(parse_value(fields[3], "demand_kw", path, row));
  }
  if (row == 0) fail(path, "no data rows");
  t.validate();
  return t;
}

void save_trace(const ExogenousTrace& t, const std::string& path, const TraceSchema& schema) {
  t.validate();
  std::ofstream out(path);
  if (!out) fail(path, "cannot open file for writing");
  out << schema.header << "\n";
  const long start = days_from_civil(2024, 1, 1) * 1440L;
  char buf[96];
  for (long i = 0; i < t.slots(); ++i) {
    std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%.17g", t.pv[i], t.wind[i], t.demand[i]);
    out << format_timestamp(start + i * schema.cadence_minutes) << buf << "\n";
  }
  if (!out.good()) fail(path, "write failed");
}

ExogenousTrace synth_trace(int days, std::uint64_t seed, const SynthProfile& pr) {
  if (days <= 0) throw std::invalid_argument("synth_trace: days must be positive");
  Rng rng(seed);
  ExogenousTrace t;
  const long n = static_cast<long>(days) * TariffSchedule::kSlotsPerDay;
  t.pv.reserve(n);
  t.wind.reserve(n);
  t.demand.reserve(n);

  // demand shape: base load plus morning and evening peaks, normalized to
  // mean 1 over the day so demand_mean_kw is the long-run average
  std::array<double, TariffSchedule::kSlotsPerDay> shape{};
  double shape_sum = 0.0;
  for (int s = 0; s < TariffSchedule::kSlotsPerDay; ++s) {
    const double hour = s * 0.5;
    shape[s] = 0.75 + 0.35 * std::exp(-(hour - 8.0) * (hour - 8.0) / 4.5) +
               0.55 * std::exp(-(hour - 18.5) * (hour - 18.5) / 6.5);
    shape_sum += shape[s];
  }
  const double shape_mean = shape_sum / TariffSchedule::kSlotsPerDay;

  double wind = pr.wind_mean_kw;
  for (long i = 0; i < n; ++i) {
    const int s = static_cast<int>(i % TariffSchedule::kSlotsPerDay);
    const double hour = s * 0.5;

    double pv = 0.0;
    if (hour >= 6.0 && hour < 18.0) {
      const double arc = std::sin(kPi * (hour - 6.0) / 12.0);
      pv = pr.pv_peak_kw * std::pow(arc, 1.3);
      pv *= 1.0 + pr.pv_noise * std::clamp(rng.normal(), -2.5, 2.5);
      pv = std::clamp(pv, 0.0, pr.pv_peak_kw * 1.2);
    }
    t.pv.push_back(pv);

    wind += pr.wind_revert * (pr.wind_mean_kw - wind) + pr.wind_sigma_kw * rng.normal();
    wind = std::clamp(wind, 0.0, pr.wind_mean_kw * 2.5);
    t.wind.push_back(wind);

    double d = pr.demand_mean_kw * shape[s] / shape_mean;
    d *= 1.0 + pr.demand_noise * std::clamp(rng.normal(), -2.5, 2.5);
    d = std::clamp(d, 0.0, pr.demand_mean_kw * 1.8);
    t.demand.push_back(d);
  }
  t.validate();
  return t;
}

TariffSchedule three_level_tariff(double peak, double flat, double valley,
                                  double export_price, double carbon_factor) {
  TariffSchedule t;
  for (int s = 0; s < TariffSchedule::kSlotsPerDay; ++s) {
    const double hour = s * 0.5;  // slot s covers [hour, hour + 0.5)
    if (hour >= 16.0 && hour < 20.0) {
      t.import_price[s] = peak;
    } else if ((hour >= 14.0 && hour < 16.0) || (hour >= 20.0 && hour < 23.0)) {
      t.import_price[s] = flat;
    } else {
      t.import_price[s] = valley;
    }
  }
  t.export_price = export_price;
  t.carbon_factor = carbon_factor;
  return t;
}

TariffSchedule default_tariff() { return three_level_tariff(0.234, 0.117, 0.07, 0.05, 0.23314); }

}  // namespace sen
