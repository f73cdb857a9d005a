#include "ktb/series.hpp"

#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

#include "ktb/errors.hpp"

namespace ktb {

struct TaylorSeries::Layout {
  int nvars = 0;
  int order = 0;
  std::vector<int> exps;     // flattened, nvars per monomial
  std::vector<int> degrees;  // total degree per monomial
  std::map<std::vector<int>, std::size_t> index;
  struct Product {
    std::size_t a, b, out;
  };
  std::vector<Product> products;

  std::size_t count() const { return degrees.size(); }
};

namespace {

void enumerate(int nvars, int degree, std::vector<int>& current, int var,
               std::vector<std::vector<int>>& out) {
  if (var == nvars - 1) {
    current[var] = degree;
    out.push_back(current);
    return;
  }
  for (int k = degree; k >= 0; --k) {
    current[var] = k;
    enumerate(nvars, degree - k, current, var + 1, out);
  }
}

std::shared_ptr<const TaylorSeries::Layout> layout_for(int nvars, int order) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const TaylorSeries::Layout>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find({nvars, order});
  if (it != cache.end()) return it->second;

  auto layout = std::make_shared<TaylorSeries::Layout>();
  layout->nvars = nvars;
  layout->order = order;
  std::vector<std::vector<int>> monomials;
  std::vector<int> current(nvars, 0);
  for (int d = 0; d <= order; ++d) enumerate(nvars, d, current, 0, monomials);
  for (std::size_t i = 0; i < monomials.size(); ++i) {
    int deg = 0;
    for (int e : monomials[i]) deg += e;
    layout->degrees.push_back(deg);
    layout->exps.insert(layout->exps.end(), monomials[i].begin(), monomials[i].end());
    layout->index.emplace(monomials[i], i);
  }
  std::vector<int> sum(nvars);
  for (std::size_t a = 0; a < monomials.size(); ++a) {
    for (std::size_t b = 0; b < monomials.size(); ++b) {
      if (layout->degrees[a] + layout->degrees[b] > order) continue;
      for (int v = 0; v < nvars; ++v) sum[v] = monomials[a][v] + monomials[b][v];
      layout->products.push_back({a, b, layout->index.at(sum)});
    }
  }
  cache.emplace(std::make_pair(nvars, order), layout);
  return layout;
}

}  // namespace

TaylorSeries::TaylorSeries(int nvars, int order) {
  if (nvars < 1 || order < 0) throw std::invalid_argument("TaylorSeries: bad shape");
  layout_ = layout_for(nvars, order);
  coeffs_.assign(layout_->count(), 0.0);
}

TaylorSeries TaylorSeries::constant(int nvars, int order, double value) {
  TaylorSeries s(nvars, order);
  s.coeffs_[0] = value;
  return s;
}

TaylorSeries TaylorSeries::variable(int nvars, int order, int var, double at) {
  TaylorSeries s(nvars, order);
  s.coeffs_[0] = at;
  if (order >= 1) {
    std::vector<int> e(nvars, 0);
    e[var] = 1;
    s.coeffs_[s.layout_->index.at(e)] = 1.0;
  }
  return s;
}

int TaylorSeries::nvars() const { return layout_ ? layout_->nvars : 0; }
int TaylorSeries::order() const { return layout_ ? layout_->order : -1; }

std::span<const int> TaylorSeries::exponents(std::size_t i) const {
  return {layout_->exps.data() + i * layout_->nvars, static_cast<std::size_t>(layout_->nvars)};
}

int TaylorSeries::degree(std::size_t i) const { return layout_->degrees[i]; }

double TaylorSeries::coeff(std::span<const int> exps) const {
  if (static_cast<int>(exps.size()) != nvars()) throw std::invalid_argument("coeff: arity");
  auto it = layout_->index.find(std::vector<int>(exps.begin(), exps.end()));
  return it == layout_->index.end() ? 0.0 : coeffs_[it->second];
}

void TaylorSeries::set_coeff(std::span<const int> exps, double value) {
  if (static_cast<int>(exps.size()) != nvars()) throw std::invalid_argument("set_coeff: arity");
  auto it = layout_->index.find(std::vector<int>(exps.begin(), exps.end()));
  if (it == layout_->index.end()) throw std::out_of_range("set_coeff: beyond truncation order");
  coeffs_[it->second] = value;
}

double TaylorSeries::coeff(int k) const {
  if (nvars() != 1) throw std::invalid_argument("coeff(int) needs a univariate series");
  return k >= 0 && k <= order() ? coeffs_[static_cast<std::size_t>(k)] : 0.0;
}

void TaylorSeries::require_compatible(const TaylorSeries& other) const {
  if (layout_ != other.layout_) throw std::invalid_argument("TaylorSeries: shape mismatch");
}

TaylorSeries& TaylorSeries::operator+=(const TaylorSeries& other) {
  require_compatible(other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

TaylorSeries& TaylorSeries::operator-=(const TaylorSeries& other) {
  require_compatible(other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

TaylorSeries& TaylorSeries::operator*=(const TaylorSeries& other) {
  require_compatible(other);
  std::vector<double> out(coeffs_.size(), 0.0);
  for (const auto& p : layout_->products) out[p.out] += coeffs_[p.a] * other.coeffs_[p.b];
  coeffs_ = std::move(out);
  return *this;
}

TaylorSeries& TaylorSeries::operator+=(double c) {
  coeffs_[0] += c;
  return *this;
}
TaylorSeries& TaylorSeries::operator-=(double c) {
  coeffs_[0] -= c;
  return *this;
}
TaylorSeries& TaylorSeries::operator*=(double c) {
  for (double& x : coeffs_) x *= c;
  return *this;
}
TaylorSeries& TaylorSeries::operator/=(double c) {
  for (double& x : coeffs_) x /= c;
  return *this;
}

TaylorSeries TaylorSeries::operator-() const {
  TaylorSeries r = *this;
  for (double& x : r.coeffs_) x = -x;
  return r;
}

TaylorSeries TaylorSeries::with_order(int new_order) const {
  TaylorSeries r(nvars(), new_order);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    if (degree(i) <= new_order) r.set_coeff(exponents(i), coeffs_[i]);
  }
  return r;
}

TaylorSeries TaylorSeries::derivative(int var) const {
  if (order() < 1) return TaylorSeries(nvars(), 0);
  TaylorSeries r(nvars(), order() - 1);
  std::vector<int> e(nvars());
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    const auto ex = exponents(i);
    if (ex[var] == 0) continue;
    std::copy(ex.begin(), ex.end(), e.begin());
    const double factor = e[var];
    e[var] -= 1;
    r.set_coeff(e, coeffs_[i] * factor);
  }
  return r;
}

TaylorSeries TaylorSeries::compose(const TaylorSeries& inner) const {
  if (nvars() != 1) throw std::invalid_argument("compose: outer series must be univariate");
  if (std::abs(inner.constant_term()) > 0.0) {
    throw std::invalid_argument("compose: inner series must vanish at the origin");
  }
  TaylorSeries result = TaylorSeries::constant(inner.nvars(), inner.order(), coeff(order()));
  for (int k = order() - 1; k >= 0; --k) {
    result *= inner;
    result += coeff(k);
  }
  return result;
}

TaylorSeries TaylorSeries::revert() const {
  if (nvars() != 1) throw std::invalid_argument("revert: univariate series required");
  const double a1 = coeff(1);
  if (std::abs(coeff(0)) > 0.0 || std::abs(a1) < 1e-300) {
    throw DomainError("revert: series must be a local diffeomorphism at 0");
  }
  const int n = order();
  TaylorSeries x = TaylorSeries::variable(1, n, 0);
  TaylorSeries higher = *this;
  higher[0] = 0.0;
  higher[1] = 0.0;
  TaylorSeries sigma = x / a1;
  for (int iter = 0; iter < n; ++iter) {
    sigma = (x - higher.compose(sigma)) / a1;
  }
  return sigma;
}

TaylorSeries operator+(TaylorSeries a, const TaylorSeries& b) { return a += b; }
TaylorSeries operator-(TaylorSeries a, const TaylorSeries& b) { return a -= b; }
TaylorSeries operator*(const TaylorSeries& a, const TaylorSeries& b) {
  TaylorSeries r = a;
  r *= b;
  return r;
}
TaylorSeries operator/(const TaylorSeries& a, const TaylorSeries& b) { return a * reciprocal(b); }
TaylorSeries operator+(TaylorSeries a, double c) { return a += c; }
TaylorSeries operator+(double c, TaylorSeries a) { return a += c; }
TaylorSeries operator-(TaylorSeries a, double c) { return a -= c; }
TaylorSeries operator-(double c, const TaylorSeries& a) { return (-a) += c; }
TaylorSeries operator*(TaylorSeries a, double c) { return a *= c; }
TaylorSeries operator*(double c, TaylorSeries a) { return a *= c; }
TaylorSeries operator/(TaylorSeries a, double c) { return a /= c; }

TaylorSeries apply_function(const TaylorSeries& s, std::span<const double> derivs) {
  // f(s0 + u) = sum_k f^(k)(s0) u^k / k!, u nilpotent of index order+1.
  TaylorSeries u = s;
  u[0] = 0.0;
  const int n = std::min<int>(s.order(), static_cast<int>(derivs.size()) - 1);
  TaylorSeries result = TaylorSeries::constant(s.nvars(), s.order(), 0.0);
  double factorial = 1.0;
  for (int k = 1; k <= n; ++k) factorial *= k;
  for (int k = n; k >= 0; --k) {
    result *= u;
    result += derivs[static_cast<std::size_t>(k)] / factorial;
    if (k > 0) factorial /= k;
  }
  return result;
}

TaylorSeries reciprocal(const TaylorSeries& s) {
  const double s0 = s.constant_term();
  if (std::abs(s0) < 1e-300) throw DomainError("reciprocal of a series vanishing at the origin");
  std::vector<double> d(static_cast<std::size_t>(s.order()) + 1);
  double v = 1.0 / s0;
  for (int k = 0; k <= s.order(); ++k) {
    d[static_cast<std::size_t>(k)] = v;
    v *= -(k + 1) / s0;
  }
  return apply_function(s, d);
}

TaylorSeries pow(const TaylorSeries& s, double p) {
  const double s0 = s.constant_term();
  if (!(s0 > 0.0)) throw DomainError("real power of a series with non-positive constant term");
  std::vector<double> d(static_cast<std::size_t>(s.order()) + 1);
  double coef = 1.0;
  for (int k = 0; k <= s.order(); ++k) {
    d[static_cast<std::size_t>(k)] = coef * std::pow(s0, p - k);
    coef *= (p - k);
  }
  return apply_function(s, d);
}

TaylorSeries sqrt(const TaylorSeries& s) { return pow(s, 0.5); }

TaylorSeries pow_int(const TaylorSeries& s, int k) {
  if (k < 0) return reciprocal(pow_int(s, -k));
  TaylorSeries result = TaylorSeries::constant(s.nvars(), s.order(), 1.0);
  TaylorSeries base = s;
  while (k > 0) {
    if (k & 1) result *= base;
    k >>= 1;
    if (k > 0) base *= base;
  }
  return result;
}

TaylorSeries exp(const TaylorSeries& s) {
  std::vector<double> d(static_cast<std::size_t>(s.order()) + 1, std::exp(s.constant_term()));
  return apply_function(s, d);
}

TaylorSeries sin(const TaylorSeries& s) {
  const double s0 = s.constant_term();
  const double cycle[4] = {std::sin(s0), std::cos(s0), -std::sin(s0), -std::cos(s0)};
  std::vector<double> d(static_cast<std::size_t>(s.order()) + 1);
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = cycle[k % 4];
  return apply_function(s, d);
}

TaylorSeries cos(const TaylorSeries& s) {
  const double s0 = s.constant_term();
  const double cycle[4] = {std::cos(s0), -std::sin(s0), -std::cos(s0), std::sin(s0)};
  std::vector<double> d(static_cast<std::size_t>(s.order()) + 1);
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = cycle[k % 4];
  return apply_function(s, d);
}

}  // namespace ktb
