"""Non-bank actors: borrowers, savers, investors, and the government.

Agents own no books of their own — their money lives in deposit
accounts at commercial banks (or, for the government, at the central
bank).  What they contribute is behaviour: when to request a loan, how
it is sized, when to reinvest a dividend, how treasuries roll.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .bank import Bank, Denial, LoanRecord
from .clearing import CentralBank, withdraw_reserves_to_cash, sweep_cash_to_reserves
from .instruments import Instrument, LoanTerms, period_interest
from .ledger import AccountingSystem


@dataclass
class Borrower:
    """Requests a loan whenever its window opens and it has none running.

    ``window`` staggers demand: the borrower asks at steps where
    step % window == num % window.  ``sizing`` picks the principal:
    "fixed" uses ``principal`` as given, "capacity" asks for everything
    the lender can currently grant.
    """
    num: int
    id: str
    bank_of_account: str
    lender_bank: str
    employer_bank: str
    principal: int
    periods: int
    window: int = 1
    instrument: Instrument = Instrument.COMPOUND
    risk_weight_permil: int = 500
    sizing: str = "fixed"
    reborrow: bool = True
    account_id: str = ""
    current_loan: LoanRecord | None = None
    ever_borrowed: bool = False
    defaulted: bool = False

    def __post_init__(self) -> None:
        if not self.account_id:
            self.account_id = self.id

    def wants_loan(self, step: int) -> bool:
        if self.defaulted or self.current_loan is not None:
            return False
        if self.ever_borrowed and not self.reborrow:
            return False
        return step % self.window == self.num % self.window

    def request_size(self, lender: Bank) -> int:
        if self.sizing == "fixed":
            return self.principal
        # "capacity": everything the lender can put into one more loan
        if lender.policy.reserve_control:
            room = lender.excess_reserve_lending_room()
        else:
            room = lender.capital_loan_capacity() * 1000 // max(
                self.risk_weight_permil, 1)
        return min(room, self.principal) if self.principal else room

    def make_terms(self, rate_bp: int, size: int) -> LoanTerms:
        return LoanTerms(size, rate_bp, self.periods, self.instrument,
                         self.risk_weight_permil)


@dataclass
class Saver:
    """Parks an endowment as a deposit and leaves it there."""
    num: int
    id: str
    bank: str
    endowment: int


@dataclass
class Investor:
    """Buys bank shares at start; optionally rolls dividend income back
    into fresh capital every ``reinvest_stride`` steps."""
    num: int
    id: str
    bank: str
    endowment: int
    reinvest: bool = False
    reinvest_stride: int = 12
    account_id: str = ""

    def __post_init__(self) -> None:
        if not self.account_id:
            self.account_id = self.id

    def reinvest_due(self, step: int) -> bool:
        return self.reinvest and step > 0 and step % self.reinvest_stride == 0


def reinvest_deposit_as_capital(system: AccountingSystem, cb: CentralBank,
                                bank: Bank, investor: Investor, step: int) -> int:
    """Convert the investor's whole deposit balance into new share capital.

    The round trip is explicit: the deposit is cashed out of the vault
    (pulling reserves in as cash first if the vault is short), the cash
    buys shares, and any pulled reserves are swept straight back.  Net
    vault cash and reserves are unchanged; deposits shrink and capital
    grows by the same amount.
    """
    amount = system.balance(investor.bank, "deposits", investor.account_id)
    if amount <= 0:
        return 0
    memo = f"reinvest#{investor.id}s{step}"
    vault = system.balance(bank.name, "cash", "vault")
    pull = max(0, amount - vault)
    if pull and cb.reserve_balance(bank.name) < pull:
        return 0  # cannot cash the investor out this step
    if pull:
        withdraw_reserves_to_cash(system, cb, bank.name, pull, memo)
    system.post((bank.name, "deposits", investor.account_id),
                (bank.name, "cash", "vault"), amount, memo)
    bank.sell_shares(investor.id, investor.bank, investor.account_id, amount, memo)
    if pull:
        sweep_cash_to_reserves(system, cb, bank.name, pull, memo)
    return amount


@dataclass
class Treasury:
    """A government bond held by one bank: issued against reserves,
    paying a coupon each step, redeemed at maturity."""
    holder: str
    amount: int
    rate_bp: int
    issued_step: int
    periods: int

    @property
    def coupon(self) -> int:
        return period_interest(self.amount, self.rate_bp)

    def matures_at(self) -> int:
        return self.issued_step + self.periods


@dataclass
class Government:
    """Holds an account at the central bank, collects a flat tax on
    salaries, and may fund itself by selling treasuries to banks."""
    tax_permil: int = 0
    treasuries: list[Treasury] = field(default_factory=list)

    def issue_treasury(self, system: AccountingSystem, cb: CentralBank,
                       bank: str, amount: int, rate_bp: int, periods: int,
                       step: int) -> Treasury:
        """Bank buys a bond: its reserves move to the government account."""
        memo = f"treasury.issue#{bank}s{step}"
        system.post((bank, "treasuries", "main"), (bank, "reserves", "main"),
                    amount, memo)
        system.post((cb.name, "reserves", bank),
                    (cb.name, "government", cb.GOVERNMENT_ACCOUNT), amount, memo)
        bond = Treasury(bank, amount, rate_bp, step, periods)
        self.treasuries.append(bond)
        return bond

    def service_treasuries(self, system: AccountingSystem, cb: CentralBank,
                           step: int) -> tuple[list[tuple[str, int]], list[str]]:
        """Pay coupons due this step and redeem matured bonds.

        Returns ([(holder, amount paid)], [events]) where events flag
        any payment the government account could not cover ("illiquid"
        entries); unpayable bonds stay outstanding and retry next step.
        """
        paid: list[tuple[str, int]] = []
        events: list[str] = []
        still_open: list[Treasury] = []
        for bond in self.treasuries:
            coupon = bond.coupon
            due = coupon + (bond.amount if step >= bond.matures_at() else 0)
            if due == 0:
                still_open.append(bond)
                continue
            if cb.government_balance() < due:
                events.append(f"illiquid:{bond.holder}:{due}")
                still_open.append(bond)
                continue
            memo = f"treasury.service#{bond.holder}s{step}"
            system.post((cb.name, "government", cb.GOVERNMENT_ACCOUNT),
                        (cb.name, "reserves", bond.holder), due, memo)
            if coupon > 0:
                system.post((bond.holder, "reserves", "main"),
                            (bond.holder, "interest_income", "main"), coupon, memo)
            if step >= bond.matures_at():
                system.post((bond.holder, "reserves", "main"),
                            (bond.holder, "treasuries", "main"), bond.amount, memo)
            else:
                still_open.append(bond)
            paid.append((bond.holder, due))
        self.treasuries = still_open
        return paid, events

    def collect_tax(self, system: AccountingSystem, cb: CentralBank,
                    account_bank: str, account_id: str, salary: int,
                    step: int, payer_id: str) -> int:
        """Withhold tax_permil of a salary from the recipient's deposit
        into the government's central-bank account."""
        tax = salary * self.tax_permil // 1000
        if tax <= 0:
            return 0
        balance = system.balance(account_bank, "deposits", account_id)
        if balance < tax:
            return 0  # nothing withheld rather than a partial grab
        memo = f"tax#{payer_id}s{step}"
        system.post((account_bank, "deposits", account_id),
                    (account_bank, "reserves", "main"), tax, memo)
        system.post((cb.name, "reserves", account_bank),
                    (cb.name, "government", cb.GOVERNMENT_ACCOUNT), tax, memo)
        return tax


def validate_population(borrowers: list[Borrower]) -> list[str]:
    """Sanity warnings for configurations likely to starve the payment
    cycle (not errors: thin populations are legitimate for small demos)."""
    warnings = []
    by_window: dict[int, int] = {}
    for borrower in borrowers:
        by_window[borrower.window] = by_window.get(borrower.window, 0) + 1
    for window, count in sorted(by_window.items()):
        if window > 1 and count < window:
            warnings.append(
                f"only {count} borrowers share window {window}; "
                "loan demand will arrive in bursts"
            )
    return warnings
