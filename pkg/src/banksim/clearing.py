"""Central bank: reserve accounts, gross settlement, base rate, government
account, and a minimal overnight interbank lending fallback.

Every commercial bank holds a liability reserve account here, mirrored
by an asset ``reserves`` ledger on its own books.  Settlement moves
value between two reserve accounts on the central bank's book — a
single posting, since both accounts are liabilities of the same book —
and the triggering customer-side postings at the commercial banks carry
a linked memo so the audit trail pairs them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .ledger import AccountingSystem, Form, Posting, WouldOverdraw
from .instruments import round_half_up


class ClearingError(Exception):
    pass


class InsufficientReserves(ClearingError):
    """Paying bank's reserve account cannot cover the settlement."""


class NoLenderAvailable(ClearingError):
    """No bank has spare reserves to lend overnight."""


class SettlementFailure(ClearingError):
    """Settlement failed even after the interbank borrowing fallback."""


@dataclass
class InterbankLoan:
    lender: str
    borrower: str
    amount: int
    rate_bp: int
    due_step: int

    @property
    def interest(self) -> int:
        # one step = one month of the annual rate
        return round_half_up(self.amount * self.rate_bp, 120_000)


class CentralBank:
    """The clearing house.  Holds only cash assets; liabilities are the
    commercial banks' reserve accounts and the government's deposit."""

    GOVERNMENT_ACCOUNT = "government"

    def __init__(self, system: AccountingSystem, name: str = "central",
                 base_rate_bp: int = 200) -> None:
        self.system = system
        self.name = name
        self.base_rate_bp = base_rate_bp
        # single funnel for every interbank flow; observers hook in here
        self.on_settle: Callable[[str, str, int, str], None] | None = None
        book = system.add_book(name)
        book.add_ledger("cash", Form.ASSET)
        book.add_account("cash", "vault")
        book.add_ledger("reserves", Form.LIABILITY)
        book.add_ledger("government", Form.LIABILITY)
        book.add_account("government", self.GOVERNMENT_ACCOUNT)

    # -- accounts -------------------------------------------------------------

    def register_bank(self, bank: str) -> None:
        self.system.book(self.name).add_account("reserves", bank)

    def reserve_balance(self, bank: str) -> int:
        return self.system.balance(self.name, "reserves", bank)

    def government_balance(self) -> int:
        return self.system.balance(self.name, "government", self.GOVERNMENT_ACCOUNT)

    # -- base rate ------------------------------------------------------------

    def set_base_rate(self, rate_bp: int) -> None:
        """Takes effect for loans priced after the call; running loans keep
        their contracted fixed rate."""
        if rate_bp < 0:
            raise ValueError("base rate must be non-negative")
        self.base_rate_bp = rate_bp

    # -- settlement -----------------------------------------------------------

    def settle(self, from_bank: str, to_bank: str, amount: int, memo: str = "settle") -> Posting:
        """Move reserves between two banks' accounts (gross, immediate)."""
        if from_bank == to_bank:
            raise ValueError(f"degenerate settlement {from_bank}->{to_bank}")
        if self.reserve_balance(from_bank) < amount:
            raise InsufficientReserves(
                f"{from_bank} reserves {self.reserve_balance(from_bank)} < {amount}"
            )
        posting = self.system.post(
            (self.name, "reserves", from_bank),
            (self.name, "reserves", to_bank),
            amount, memo,
        )
        if self.on_settle is not None:
            self.on_settle(from_bank, to_bank, amount, memo)
        return posting

    # -- physical cash in/out of the vault -------------------------------------

    def cash_in(self, bank: str, amount: int, memo: str = "reserve.deposit") -> Posting:
        """Commercial bank hands vault cash to the central bank; its reserve
        account grows.  Caller posts the commercial-side mirror."""
        return self.system.post(
            (self.name, "cash", "vault"), (self.name, "reserves", bank), amount, memo
        )

    def cash_out(self, bank: str, amount: int, memo: str = "reserve.withdraw") -> Posting:
        """Reverse of cash_in: reserve account shrinks, physical cash leaves."""
        return self.system.post(
            (self.name, "reserves", bank), (self.name, "cash", "vault"), amount, memo
        )

    # -- government account ----------------------------------------------------

    def government_deposit(self, amount: int, memo: str = "gov.deposit") -> Posting:
        return self.system.post(
            (self.name, "cash", "vault"),
            (self.name, "government", self.GOVERNMENT_ACCOUNT),
            amount, memo,
        )

    def government_withdraw(self, amount: int, memo: str = "gov.withdraw") -> Posting:
        balance = self.government_balance()
        if balance < amount:
            raise WouldOverdraw(f"government balance {balance} < {amount}")
        return self.system.post(
            (self.name, "government", self.GOVERNMENT_ACCOUNT),
            (self.name, "cash", "vault"),
            amount, memo,
        )


def sweep_cash_to_reserves(system: AccountingSystem, cb: CentralBank, bank: str,
                           amount: int, memo: str = "reserve.sweep") -> None:
    """Bank moves vault cash into its central-bank reserve account: an
    asset swap on its own books plus the mirror at the central bank."""
    system.post((bank, "reserves", "main"), (bank, "cash", "vault"), amount, memo)
    cb.cash_in(bank, amount, memo)


def withdraw_reserves_to_cash(system: AccountingSystem, cb: CentralBank, bank: str,
                              amount: int, memo: str = "reserve.draw") -> None:
    """Reverse sweep: reserve account down, vault cash up."""
    cb.cash_out(bank, amount, memo)
    system.post((bank, "cash", "vault"), (bank, "reserves", "main"), amount, memo)


def interbank_borrow(system: AccountingSystem, cb: CentralBank, borrower_bank: str,
                     amount: int, candidates: list[str], step: int) -> InterbankLoan:
    """Overnight borrowing fallback when a settlement would fail.

    Picks the candidate with the largest spare reserve balance.  The loan
    is booked as an interbank claim/debt pair and repaid next step with
    one month's interest at the base rate.
    """
    if amount <= 0:
        raise ValueError("interbank loan amount must be positive")
    best: str | None = None
    best_balance = 0
    for bank in candidates:
        if bank == borrower_bank:
            continue
        balance = cb.reserve_balance(bank)
        if balance >= amount and balance > best_balance:
            best, best_balance = bank, balance
    if best is None:
        raise NoLenderAvailable(f"no bank can lend {amount} to {borrower_bank}")
    memo = f"interbank.lend#{step}"
    system.post((best, "interbank_claims", "main"), (best, "reserves", "main"), amount, memo)
    cb.settle(best, borrower_bank, amount, memo)
    system.post((borrower_bank, "reserves", "main"),
                (borrower_bank, "interbank_debt", "main"), amount, memo)
    return InterbankLoan(best, borrower_bank, amount, cb.base_rate_bp, step + 1)


def repay_interbank(system: AccountingSystem, cb: CentralBank, loan: InterbankLoan) -> None:
    """Settle principal + one month's interest back to the lender.

    The borrower pays the interest out of its own income; raises
    SettlementFailure if it lacks reserves or income to do so.
    """
    interest = loan.interest
    total = loan.amount + interest
    borrower, lender = loan.borrower, loan.lender
    if cb.reserve_balance(borrower) < total:
        raise SettlementFailure(
            f"{borrower} cannot repay interbank loan of {total} to {lender}"
        )
    income = system.balance(borrower, "interest_income", "main")
    retained = system.balance(borrower, "retained_earnings", "main")
    if interest > 0 and income + retained < interest:
        raise SettlementFailure(
            f"{borrower} lacks income for interbank interest {interest}"
        )
    memo = f"interbank.repay#{loan.due_step}"
    system.post((borrower, "interbank_debt", "main"), (borrower, "reserves", "main"),
                loan.amount, memo)
    if interest > 0:
        from_income = min(interest, income)
        if from_income > 0:
            system.post((borrower, "interest_income", "main"),
                        (borrower, "reserves", "main"), from_income, memo)
        if interest - from_income > 0:
            system.post((borrower, "retained_earnings", "main"),
                        (borrower, "reserves", "main"), interest - from_income, memo)
    cb.settle(borrower, lender, total, memo)
    system.post((lender, "reserves", "main"), (lender, "interbank_claims", "main"),
                loan.amount, memo)
    if interest > 0:
        system.post((lender, "reserves", "main"), (lender, "interest_income", "main"),
                    interest, memo)
