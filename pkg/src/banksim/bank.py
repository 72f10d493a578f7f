"""Commercial bank: regulated lending, payment processing, salaries,
dividends, share sales, provisioning, and default write-offs.

A bank's books carry the ledgers {cash, reserves, loans, treasuries,
interbank_claims | deposits, interest_income, loss_provision,
retained_earnings, interbank_debt | capital}.  Income-type ledgers are
liability-class by default and, crucially, are *not* deposit-class:
money sitting in interest income does not count toward the reserve
requirement's deposit base unless a configuration override reclassifies
it.

Cross-bank flows are composed of per-bank postings plus a central-bank
settlement, all sharing one memo so the audit log pairs them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .clearing import (
    CentralBank,
    InsufficientReserves,
    InterbankLoan,
    NoLenderAvailable,
    interbank_borrow,
)
from .instruments import Instrument, LoanState, LoanTerms, Status, round_half_up
from .ledger import AccountingSystem, Form


@dataclass
class BankPolicy:
    reserve_control: bool = False
    reserve_requirement_permil: int = 100
    capital_control: bool = False
    capital_requirement_permil: int = 80   # Basel-style total capital floor
    risk_weight_permil: int = 500
    loss_provision_permil: int = 0
    dividend_permil: int = 50
    dividend_stride: int = 12


# default chart of accounts; ledger_overrides may flip deposit_class flags
LEDGER_LAYOUT: list[tuple[str, Form, bool]] = [
    ("cash", Form.ASSET, False),
    ("reserves", Form.ASSET, False),
    ("loans", Form.ASSET, False),
    ("treasuries", Form.ASSET, False),
    ("interbank_claims", Form.ASSET, False),
    ("deposits", Form.LIABILITY, True),
    ("interest_income", Form.LIABILITY, False),
    ("loss_provision", Form.LIABILITY, False),
    ("retained_earnings", Form.LIABILITY, False),
    ("interbank_debt", Form.LIABILITY, False),
    ("capital", Form.CAPITAL, False),
]


@dataclass
class LoanRecord:
    loan_id: str
    borrower_id: str
    account_bank: str
    account_id: str
    state: LoanState
    granted_step: int
    weighted: int  # current risk-weighted contribution, kept in sync


class Denial(NamedTuple):
    reason: str  # "reserve" | "capital" | "illiquid" | "insolvent"


class PaymentOutcome(NamedTuple):
    paid: bool
    reason: str  # "" on success; "funds" | "settlement" | "index"
    amount: int


@dataclass
class Shareholding:
    shares: int
    account_bank: str
    account_id: str


class Bank:
    def __init__(self, system: AccountingSystem, cb: CentralBank, name: str,
                 policy: BankPolicy,
                 ledger_overrides: dict[str, dict] | None = None) -> None:
        self.system = system
        self.cb = cb
        self.name = name
        self.policy = policy
        book = system.add_book(name)
        overrides = ledger_overrides or {}
        for ledger, form, deposit_class in LEDGER_LAYOUT:
            tweaks = overrides.get(ledger, {})
            book.add_ledger(ledger, form,
                            deposit_class=tweaks.get("deposit_class", deposit_class))
        for ledger, account in [
            ("cash", "vault"), ("reserves", "main"), ("treasuries", "main"),
            ("interbank_claims", "main"), ("interest_income", "main"),
            ("loss_provision", "main"), ("retained_earnings", "main"),
            ("interbank_debt", "main"), ("capital", "shares"),
        ]:
            book.add_account(ledger, account)
        cb.register_bank(name)

        self.book = book
        self.loan_book: dict[str, LoanRecord] = {}
        self.weighted_outstanding = 0
        self.defaulted_residual = 0
        self.insolvent = False
        self.employees: list = []        # borrower agents, sorted by num
        self.shareholders: dict[str, Shareholding] = {}
        self._loan_seq = 0
        # wired by the engine
        self.peers: dict[str, "Bank"] = {}
        self.interbank_loans: list[InterbankLoan] = []

    # -- balance queries -------------------------------------------------------

    @property
    def reserves(self) -> int:
        return self.book.ledger_total("reserves")

    @property
    def capital_total(self) -> int:
        return self.book.capital_total

    @property
    def income_balance(self) -> int:
        return self.system.balance(self.name, "interest_income", "main")

    @property
    def retained_balance(self) -> int:
        return self.system.balance(self.name, "retained_earnings", "main")

    def deposit_base(self) -> int:
        return self.book.deposit_class_total()

    # -- lending capacity --------------------------------------------------------

    def reserve_loan_capacity(self) -> int:
        """Deposit headroom under the reserve requirement:
        max(0, reserves/R - deposit-class total)."""
        r = self.policy.reserve_requirement_permil
        if r <= 0:
            raise ZeroDivisionError(
                f"{self.name}: reserve control enabled with R=0"
            )
        return max(0, self.reserves * 1000 // r - self.deposit_base())

    def capital_loan_capacity(self) -> int:
        """Remaining risk-weighted exposure: max(0, capital/C - weighted book)."""
        c = self.policy.capital_requirement_permil
        if c <= 0:
            raise ZeroDivisionError(
                f"{self.name}: capital control enabled with C=0"
            )
        return max(0, self.capital_total * 1000 // c - self.weighted_outstanding)

    @staticmethod
    def weighted(amount: int, risk_weight_permil: int) -> int:
        return amount * risk_weight_permil // 1000

    def excess_reserve_lending_room(self) -> int:
        """The textbook excess-reserve figure: reserves minus required
        reserves on the current deposit base.  Floor rounding keeps it
        exactly R/1000 of reserve_loan_capacity, so capacity-sized
        lending walks the deposit multiplier all the way down."""
        r = self.policy.reserve_requirement_permil
        return max(0, self.reserves - self.deposit_base() * r // 1000)

    # -- lending -----------------------------------------------------------------

    def grant_loan(self, borrower_id: str, account_bank: str, account_id: str,
                   terms: LoanTerms, step: int) -> LoanRecord | Denial:
        """Create a loan if every enabled control admits it.

        A local grant credits the borrower's deposit here; a cross-bank
        grant settles reserves to the borrower's account-holding bank.
        Denials identify the binding constraint and post nothing.
        """
        if self.insolvent:
            return Denial("insolvent")
        principal = terms.principal
        local = account_bank == self.name
        if self.policy.reserve_control:
            r = self.policy.reserve_requirement_permil
            if r <= 0:
                raise ZeroDivisionError(f"{self.name}: reserve control with R=0")
            if local:
                ok = self.reserve_loan_capacity() >= principal
            else:
                after = self.reserves - principal
                ok = after >= 0 and after * 1000 // r - self.deposit_base() >= 0
            if not ok:
                return Denial("reserve")
        if self.policy.capital_control:
            if self.weighted(principal, terms.risk_weight_permil) > self.capital_loan_capacity():
                return Denial("capital")
        if not local and self.cb.reserve_balance(self.name) < principal:
            return Denial("illiquid")

        self._loan_seq += 1
        loan_id = f"L{self._loan_seq}"
        memo = f"grant#{self.name}.{loan_id}"
        self.book.add_account("loans", loan_id)
        if local:
            self.system.post((self.name, "loans", loan_id),
                             (self.name, "deposits", account_id), principal, memo)
        else:
            self.system.post((self.name, "loans", loan_id),
                             (self.name, "reserves", "main"), principal, memo)
            self.cb.settle(self.name, account_bank, principal, memo)
            self.system.post((account_bank, "reserves", "main"),
                             (account_bank, "deposits", account_id), principal, memo)

        record = LoanRecord(
            loan_id=loan_id, borrower_id=borrower_id, account_bank=account_bank,
            account_id=account_id, state=LoanState(terms), granted_step=step,
            weighted=self.weighted(principal, terms.risk_weight_permil),
        )
        self.loan_book[loan_id] = record
        self.weighted_outstanding += record.weighted

        provision = round_half_up(principal * self.policy.loss_provision_permil, 1000)
        if provision > 0:
            # funded from income, best effort: skipped silently if the bank
            # has not earned anything yet
            self._pay_from_income((self.name, "loss_provision", "main"),
                                  provision, memo + ".prov", best_effort=True)
        return record

    # -- payment processing --------------------------------------------------------

    def process_payment(self, record: LoanRecord, step: int,
                        index_factor_permil: int | None = None) -> PaymentOutcome:
        """Collect the current due payment on one loan.

        Local loans move deposit money straight into interest income and
        against the loan asset; cross-bank loans settle the full payment
        through the central bank first.  Insufficient borrower funds (or
        a failed settlement) leave all state untouched: the payment is
        missed and will be retried next step.
        """
        state = record.state
        row, rebase_gain = state.preview_due(index_factor_permil)
        due = row.total
        if due == 0 and rebase_gain == 0:
            state.apply_payment(0, index_factor_permil)
            return PaymentOutcome(True, "", 0)
        orig_bank = record.account_bank
        balance = self.system.balance(orig_bank, "deposits", record.account_id)
        if balance < due:
            state.missed_streak += 1
            return PaymentOutcome(False, "funds", due)
        local = orig_bank == self.name
        memo = f"pay#{self.name}.{record.loan_id}p{state.period_index}"

        if rebase_gain < 0 and self.income_balance + self.retained_balance < -rebase_gain:
            state.missed_streak += 1
            return PaymentOutcome(False, "index", due)
        if not local and not self._ensure_reserves(orig_bank, due, step):
            state.missed_streak += 1
            return PaymentOutcome(False, "settlement", due)

        if rebase_gain > 0:
            self.system.post((self.name, "loans", record.loan_id),
                             (self.name, "interest_income", "main"),
                             rebase_gain, memo + ".idx")
        elif rebase_gain < 0:
            self._pay_from_income((self.name, "loans", record.loan_id),
                                  -rebase_gain, memo + ".idx")

        if local:
            if row.interest > 0:
                self.system.transfer_intra(
                    self.name, ("deposits", record.account_id),
                    ("interest_income", "main"), row.interest, memo)
            if row.principal > 0:
                self.system.post((self.name, "deposits", record.account_id),
                                 (self.name, "loans", record.loan_id),
                                 row.principal, memo)
        else:
            self.system.post((orig_bank, "deposits", record.account_id),
                             (orig_bank, "reserves", "main"), due, memo)
            self.cb.settle(orig_bank, self.name, due, memo)
            if row.interest > 0:
                self.system.post((self.name, "reserves", "main"),
                                 (self.name, "interest_income", "main"),
                                 row.interest, memo)
            if row.principal > 0:
                self.system.post((self.name, "reserves", "main"),
                                 (self.name, "loans", record.loan_id),
                                 row.principal, memo)

        state.apply_payment(due, index_factor_permil)
        new_weighted = self.weighted(state.outstanding,
                                     record.state.terms.risk_weight_permil)
        self.weighted_outstanding += new_weighted - record.weighted
        record.weighted = new_weighted
        return PaymentOutcome(True, "", due)

    def _ensure_reserves(self, paying_bank: str, amount: int, step: int) -> bool:
        """Make sure ``paying_bank`` can settle ``amount``, borrowing
        overnight on its behalf if necessary."""
        shortfall = amount - self.cb.reserve_balance(paying_bank)
        if shortfall <= 0:
            return True
        try:
            loan = interbank_borrow(self.system, self.cb, paying_bank, shortfall,
                                    list(self.peers), step)
        except NoLenderAvailable:
            return False
        self.interbank_loans.append(loan)
        return True

    # -- salaries, dividends, shares ------------------------------------------------

    def _pay_from_income(self, credit_target: tuple[str, str, str], amount: int,
                         memo: str, best_effort: bool = False) -> int:
        """Debit interest income, then retained earnings, crediting the
        target.  Returns the amount actually posted."""
        remaining = amount
        for ledger in ("interest_income", "retained_earnings"):
            if remaining == 0:
                break
            available = self.system.balance(self.name, ledger, "main")
            chunk = min(available, remaining)
            if chunk > 0:
                self.system.post((self.name, ledger, "main"), credit_target,
                                 chunk, memo)
                remaining -= chunk
        if remaining and not best_effort:
            raise AssertionError(
                f"{self.name}: income underflow paying {amount} ({memo})"
            )
        return amount - remaining

    def _income_to_deposit(self, amount: int, account_bank: str, account_id: str,
                           memo: str) -> bool:
        """Move ``amount`` of income/earnings into a customer deposit,
        settling across banks when needed.  False if settlement fails."""
        if account_bank == self.name:
            self._pay_from_income((self.name, "deposits", account_id), amount, memo)
            return True
        if self.cb.reserve_balance(self.name) < amount:
            return False
        self._pay_from_income((self.name, "reserves", "main"), amount, memo)
        self.cb.settle(self.name, account_bank, amount, memo)
        self.system.post((account_bank, "reserves", "main"),
                         (account_bank, "deposits", account_id), amount, memo)
        return True

    def pay_salaries(self, step: int,
                     index_factor_permil: int | None = None
                     ) -> tuple[list[tuple[str, int]], list[tuple[str, str]]]:
        """Top employees' deposits up to their due loan payments from the
        bank's interest income (retained earnings as fallback).

        Each employee receives the *shortfall* between the due payment
        and their current balance, so loan proceeds are spent before the
        income loop starts financing repayments.  Allocation walks
        employees in id order and only funds full shortfalls; whoever
        the pool cannot cover misses their payment downstream.
        Returns ([(employee, paid)], [(employee, 'unfunded')]).
        """
        paid: list[tuple[str, int]] = []
        skipped: list[tuple[str, str]] = []
        pool = self.income_balance + self.retained_balance
        for employee in self.employees:
            record = employee.current_loan
            if record is None or record.state.status is not Status.ACTIVE:
                continue
            row, _ = record.state.preview_due(index_factor_permil)
            balance = self.system.balance(employee.bank_of_account, "deposits",
                                          employee.account_id)
            shortfall = row.total - balance
            if shortfall <= 0:
                continue
            if shortfall > pool:
                skipped.append((employee.id, "unfunded"))
                continue
            memo = f"salary#{employee.id}s{step}"
            if self._income_to_deposit(shortfall, employee.bank_of_account,
                                       employee.account_id, memo):
                pool -= shortfall
                paid.append((employee.id, shortfall))
            else:
                skipped.append((employee.id, "settlement"))
        return paid, skipped

    def sell_shares(self, investor_id: str, account_bank: str, account_id: str,
                    amount: int, memo: str = "shares.buy") -> None:
        """Cash arrives in exchange for new capital (cash/capital pairing);
        the shareholder register grows by the amount paid."""
        self.system.deposit_cash(self.name, "capital", "shares", amount, memo)
        holding = self.shareholders.get(investor_id)
        if holding is None:
            self.shareholders[investor_id] = Shareholding(amount, account_bank, account_id)
        else:
            holding.shares += amount

    def pay_dividends(self, step: int) -> tuple[int, list[tuple[str, int]]]:
        """Distribute dividend_permil of total capital pro-rata to
        shareholders, entirely from income/earnings, or not at all.

        Returns (total declared, [(investor, amount)]); an unaffordable
        dividend is skipped whole rather than paid partially.
        """
        if not self.shareholders or self.policy.dividend_permil <= 0:
            return 0, []
        total = round_half_up(self.capital_total * self.policy.dividend_permil, 1000)
        if total == 0:
            return 0, []
        if self.income_balance + self.retained_balance < total:
            return total, []
        total_shares = sum(h.shares for h in self.shareholders.values())
        if total_shares == 0:
            return 0, []
        payouts: list[tuple[str, int]] = []
        allocated = 0
        entries = list(self.shareholders.items())
        for investor_id, holding in entries:
            payouts.append((investor_id, total * holding.shares // total_shares))
            allocated += payouts[-1][1]
        # residue goes deterministically: one minor unit each to the
        # earliest-registered shareholders
        remainder = total - allocated
        for i in range(remainder):
            investor_id, amount = payouts[i % len(payouts)]
            payouts[i % len(payouts)] = (investor_id, amount + 1)
        results: list[tuple[str, int]] = []
        for investor_id, amount in payouts:
            if amount <= 0:
                continue
            holding = self.shareholders[investor_id]
            memo = f"dividend#{investor_id}s{step}"
            if self._income_to_deposit(amount, holding.account_bank,
                                       holding.account_id, memo):
                results.append((investor_id, amount))
        return total, results

    # -- defaults -------------------------------------------------------------------

    def handle_default(self, record: LoanRecord) -> dict:
        """Write a loan off against provisions, then income, then retained
        earnings, then capital.

        Whatever the cascade cannot absorb stays on the loan asset as a
        defaulted residual and flags the bank insolvent: it stops
        lending, but the simulation carries on.
        """
        outstanding = record.state.write_off()
        self.weighted_outstanding -= record.weighted
        record.weighted = 0
        remaining = outstanding
        absorbed: dict[str, int] = {}
        memo = f"writeoff#{self.name}.{record.loan_id}"
        sources = [
            ("loss_provision", "main"),
            ("interest_income", "main"),
            ("retained_earnings", "main"),
            ("capital", "shares"),
        ]
        for ledger, account in sources:
            if remaining == 0:
                break
            available = self.system.balance(self.name, ledger, account)
            chunk = min(available, remaining)
            if chunk > 0:
                self.system.post((self.name, ledger, account),
                                 (self.name, "loans", record.loan_id), chunk, memo)
                absorbed[ledger] = chunk
                remaining -= chunk
        if remaining > 0:
            self.defaulted_residual += remaining
            self.insolvent = True
        return {
            "loan": record.loan_id,
            "borrower": record.borrower_id,
            "outstanding": outstanding,
            "absorbed": absorbed,
            "residual": remaining,
            "insolvent": self.insolvent,
        }

    # -- reporting ------------------------------------------------------------------

    def balance_sheet(self) -> dict:
        ledgers = {
            name: ledger.total for name, ledger in self.book.ledgers.items()
        }
        return {
            "bank": self.name,
            "ledgers": ledgers,
            "assets": self.book.assets_total,
            "liabilities": self.book.liabilities_total,
            "capital": self.book.capital_total,
        }
