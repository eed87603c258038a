// Client-side validation for the schedule editor. Anything that passes here
// is submitted as a canonical SETTIME command string; the server remains the
// final authority and its Rejection reasons are shown verbatim.

export interface ScheduleForm {
    on: string;
    off: string;
    sleepStart?: string;
    sleepEnd?: string;
}

export type FormResult =
    | { ok: true; command: string }
    | { ok: false; field: keyof ScheduleForm; message: string };

const HM = /^([01]\d|2[0-3]):([0-5]\d)$/;

function bad(field: keyof ScheduleForm, message: string): FormResult {
    return { ok: false, field, message };
}

export function buildSettime(form: ScheduleForm): FormResult {
    if (!HM.test(form.on)) return bad("on", "on time must be HH:MM");
    if (!HM.test(form.off)) return bad("off", "off time must be HH:MM");
    if (form.on === form.off) return bad("off", "off time must differ from on time");

    const wantsSleep = Boolean(form.sleepStart || form.sleepEnd);
    if (!wantsSleep) {
        return { ok: true, command: `SETTIME ${form.on} ${form.off}` };
    }
    if (!form.sleepStart || !HM.test(form.sleepStart)) {
        return bad("sleepStart", "sleep start must be HH:MM");
    }
    if (!form.sleepEnd || !HM.test(form.sleepEnd)) {
        return bad("sleepEnd", "sleep end must be HH:MM");
    }
    if (form.sleepStart === form.sleepEnd) {
        return bad("sleepEnd", "sleep window must not be empty");
    }
    return {
        ok: true,
        command: `SETTIME ${form.on} ${form.off} SLEEP ${form.sleepStart} ${form.sleepEnd}`,
    };
}
