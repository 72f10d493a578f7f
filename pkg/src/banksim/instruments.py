"""Loan instruments: amortization schedules, payment application, write-offs.

Three instrument families:

* COMPOUND — fixed-term annuity: equal total payments at a monthly rate
  of annual_rate/12.
* SIMPLE — straight-line principal installments with interest charged on
  the original principal every period.
* INDEXED — outstanding principal is re-based by a per-step index factor
  before each payment, then the remaining-term annuity payment is
  recomputed (price-level-linked mortgage mechanics).

Money is integer minor units.  Interest amounts round half-up to the
minor unit.  The annuity payment constant is the exact annuity value
rounded *up*: that is the smallest constant payment that retires the
loan on schedule, so the final payment (which absorbs all accumulated
rounding residue) never exceeds the regular one in the ordinary case.
Every schedule repays the principal exactly: the sum of the principal
portions equals the original principal in minor units.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

# one period = one simulation step = one month
PERIODS_PER_YEAR = 12
BP_DENOM = 10_000
PERIOD_RATE_DENOM = BP_DENOM * PERIODS_PER_YEAR  # annual bp -> per-period fraction


def round_half_up(numerator: int, denominator: int) -> int:
    """Round numerator/denominator to the nearest integer, ties away from zero
    (non-negative operands only)."""
    return (numerator + denominator // 2) // denominator


def period_interest(balance: int, annual_rate_bp: int) -> int:
    """One period's interest on a balance, half-up to the minor unit."""
    return round_half_up(balance * annual_rate_bp, PERIOD_RATE_DENOM)


class Instrument(enum.Enum):
    COMPOUND = "compound"
    SIMPLE = "simple"
    INDEXED = "indexed"


class Status(enum.Enum):
    ACTIVE = "active"
    REPAID = "repaid"
    DEFAULTED = "defaulted"


class InstrumentError(Exception):
    pass


class WrongAmount(InstrumentError):
    """Payment does not equal the scheduled due amount (partials refused)."""


class LoanNotActive(InstrumentError):
    pass


class MissingIndexFactor(InstrumentError):
    """Index series does not cover the period being paid."""


class PaymentDue(NamedTuple):
    period: int
    interest: int
    principal: int

    @property
    def total(self) -> int:
        return self.interest + self.principal


@dataclass(frozen=True)
class LoanTerms:
    principal: int                 # minor units
    annual_rate_bp: int            # basis points per year
    periods: int
    instrument: Instrument = Instrument.COMPOUND
    risk_weight_permil: int = 500  # Basel risk weight, per-mil

    def __post_init__(self) -> None:
        if self.principal <= 0:
            raise ValueError("principal must be positive")
        if self.periods < 1:
            raise ValueError("periods must be >= 1")
        if self.annual_rate_bp < 0:
            raise ValueError("rate must be non-negative")
        if not 0 <= self.risk_weight_permil <= 1000:
            raise ValueError("risk weight must be within [0, 1000] per-mil")


@lru_cache(maxsize=4096)
def annuity_payment(principal: int, annual_rate_bp: int, periods: int) -> int:
    """Constant per-period payment: ceil of the exact annuity value.

    Computed with exact rational arithmetic so results are identical on
    every platform.
    """
    if annual_rate_bp == 0:
        return -(-principal // periods)
    r = Fraction(annual_rate_bp, PERIOD_RATE_DENOM)
    growth = (1 + r) ** periods
    exact = principal * r * growth / (growth - 1)
    return -(-exact.numerator // exact.denominator)


def annuity_schedule(terms: LoanTerms) -> list[PaymentDue]:
    """Amortization rows for a COMPOUND loan.

    Iterates the balance forward with half-up interest; the final row
    clears whatever balance remains, so principal portions sum exactly
    to the principal and the balance hits zero at the last period.
    """
    if terms.instrument is not Instrument.COMPOUND:
        raise ValueError(f"not a compound loan: {terms.instrument}")
    payment = annuity_payment(terms.principal, terms.annual_rate_bp, terms.periods)
    rows: list[PaymentDue] = []
    balance = terms.principal
    last = terms.periods - 1
    for k in range(terms.periods):
        interest = period_interest(balance, terms.annual_rate_bp)
        if k == last:
            principal = balance
        else:
            principal = min(payment - interest, balance)
        balance -= principal
        rows.append(PaymentDue(k, interest, principal))
        if balance == 0:
            # ceiling payments can retire dust-sized loans ahead of term
            break
    assert balance == 0
    return rows


def simple_schedule(terms: LoanTerms) -> list[PaymentDue]:
    """Amortization rows for a SIMPLE loan: equal principal installments,
    interest on the original principal every period."""
    if terms.instrument is not Instrument.SIMPLE:
        raise ValueError(f"not a simple loan: {terms.instrument}")
    base = terms.principal // terms.periods
    interest = period_interest(terms.principal, terms.annual_rate_bp)
    rows = [PaymentDue(k, interest, base) for k in range(terms.periods - 1)]
    final_principal = terms.principal - base * (terms.periods - 1)
    rows.append(PaymentDue(terms.periods - 1, interest, final_principal))
    return rows


def indexed_due(base_rows: list[PaymentDue], base_outstanding: list[int],
                period: int, cum_permil: int,
                factor_permil: int | None) -> tuple[int, int, PaymentDue]:
    """Due payment for an INDEXED loan at ``period``.

    The loan carries its nominal annuity schedule (``base_rows``) plus a
    cumulative per-mil index.  Each period the index is compounded by
    that period's factor, the outstanding balance is re-based by the new
    cumulative index, and the nominal payment split is scaled likewise —
    the scaled payment equals the remaining-term annuity of the re-based
    balance (annuities are scale-invariant), with rounding defined as
    scale-then-round so a unit index reproduces the nominal schedule
    exactly.

    Pure function of its arguments: a refused payment can be retried
    with a later factor without corrupting state.  Returns
    (new cumulative index, outstanding after payment, due row).
    """
    if factor_permil is None:
        raise MissingIndexFactor(f"no index factor for period {period}")
    if factor_permil <= 0:
        raise MissingIndexFactor(f"index factor must be positive, got {factor_permil}")
    cum = round_half_up(cum_permil * factor_permil, 1000)
    base = base_rows[period]
    rebased = round_half_up(base_outstanding[period] * cum, 1000)
    after = round_half_up(base_outstanding[period + 1] * cum, 1000)
    interest = round_half_up(base.interest * cum, 1000)
    return cum, after, PaymentDue(period, interest, rebased - after)


@dataclass
class LoanState:
    """Mutable servicing state for one loan."""

    terms: LoanTerms
    outstanding: int = field(init=False)
    period_index: int = 0
    status: Status = Status.ACTIVE
    missed_streak: int = 0
    cum_index_permil: int = 1000

    def __post_init__(self) -> None:
        self.outstanding = self.terms.principal
        if self.terms.instrument is Instrument.SIMPLE:
            self._schedule = simple_schedule(self.terms)
        else:
            # INDEXED loans scale this nominal annuity path by the index
            base = LoanTerms(self.terms.principal, self.terms.annual_rate_bp,
                             self.terms.periods, Instrument.COMPOUND,
                             self.terms.risk_weight_permil)
            self._schedule = annuity_schedule(base)
        if self.terms.instrument is Instrument.INDEXED:
            # outstanding-before-period prefix of the nominal path
            self._base_outstanding = [self.terms.principal]
            for row in self._schedule:
                self._base_outstanding.append(self._base_outstanding[-1] - row.principal)

    def schedule(self) -> list[PaymentDue]:
        if self.terms.instrument is Instrument.INDEXED:
            raise ValueError("indexed loans have no fixed schedule; see due()")
        return self._schedule

    def due(self, index_factor_permil: int | None = None) -> PaymentDue:
        """The payment owed for the current period.

        Recomputable without side effects (missed payments retry with
        the then-current index factor).
        """
        if self.status is not Status.ACTIVE:
            raise LoanNotActive(f"loan is {self.status.value}")
        if self.terms.instrument is not Instrument.INDEXED:
            return self._schedule[self.period_index]
        _, _, row = indexed_due(self._schedule, self._base_outstanding,
                                self.period_index, self.cum_index_permil,
                                index_factor_permil)
        return row

    def preview_due(self, index_factor_permil: int | None = None
                    ) -> tuple[PaymentDue, int]:
        """Due row plus the indexation gain (change in outstanding from
        re-basing) that books against the loan asset when the payment is
        made.  Zero gain for non-indexed instruments."""
        if self.status is not Status.ACTIVE:
            raise LoanNotActive(f"loan is {self.status.value}")
        if self.terms.instrument is not Instrument.INDEXED:
            return self._schedule[self.period_index], 0
        _, after, row = indexed_due(self._schedule, self._base_outstanding,
                                    self.period_index, self.cum_index_permil,
                                    index_factor_permil)
        return row, (after + row.principal) - self.outstanding

    def apply_payment(self, amount: int,
                      index_factor_permil: int | None = None) -> PaymentDue:
        """Advance the loan by one scheduled payment.

        ``amount`` must equal the due total exactly; partial payments are
        refused so that a failed payment is a missed payment, feeding the
        arrears/default machinery instead of producing fractional state.
        """
        if self.status is not Status.ACTIVE:
            raise LoanNotActive(f"loan is {self.status.value}")
        if self.terms.instrument is not Instrument.INDEXED:
            row = self._schedule[self.period_index]
            new_balance = self.outstanding - row.principal
            new_cum = self.cum_index_permil
        else:
            new_cum, new_balance, row = indexed_due(
                self._schedule, self._base_outstanding, self.period_index,
                self.cum_index_permil, index_factor_permil)
        if amount != row.total:
            raise WrongAmount(f"due {row.total}, offered {amount}")
        self.outstanding = new_balance
        self.cum_index_permil = new_cum
        self.period_index += 1
        self.missed_streak = 0
        if self.period_index == len(self._schedule):
            assert self.outstanding == 0
            self.status = Status.REPAID
        return row

    def write_off(self) -> int:
        """Default the loan; returns the outstanding principal to be
        absorbed by provisions/income/capital."""
        if self.status is not Status.ACTIVE:
            raise LoanNotActive(f"loan is {self.status.value}")
        self.status = Status.DEFAULTED
        lost = self.outstanding
        self.outstanding = 0
        return lost
